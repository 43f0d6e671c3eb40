fn main() -> anyhow::Result<()> {
    vbqm::cli::main()
}
