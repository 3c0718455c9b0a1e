fn main() -> std::process::ExitCode {
    ness_entanglement::cli::main()
}
