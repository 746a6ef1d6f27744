fn main() -> std::process::ExitCode {
    swiftagg::cli::main()
}
