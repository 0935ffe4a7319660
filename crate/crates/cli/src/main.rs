fn main() {
    std::process::exit(depthpilot_cli::run_cli(std::env::args_os()));
}
