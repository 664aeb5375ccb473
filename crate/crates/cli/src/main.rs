fn main() {
    std::process::exit(sweepout_cli::run_command(std::env::args().collect()));
}
