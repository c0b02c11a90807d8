fn main() -> std::process::ExitCode {
    mqhawkes_cli::main_with_args()
}
