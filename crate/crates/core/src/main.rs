fn main() {
    std::process::exit(dcsf::cli::run_cli(std::env::args_os()));
}
