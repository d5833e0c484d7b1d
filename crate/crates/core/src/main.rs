fn main() {
    std::process::exit(freight_bidding::cli::run_command(std::env::args_os()));
}
