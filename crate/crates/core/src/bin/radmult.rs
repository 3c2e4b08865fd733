fn main() {
    std::process::exit(radial_multipliers::experiments_cli::cli_main(std::env::args_os()));
}
