fn main() -> std::process::ExitCode {
    bestcell::cli::main()
}
