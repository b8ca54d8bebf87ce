fn main() -> std::process::ExitCode {
    rec_bounds::cli::main()
}
