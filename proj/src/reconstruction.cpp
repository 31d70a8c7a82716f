namespace tpmc {
}
