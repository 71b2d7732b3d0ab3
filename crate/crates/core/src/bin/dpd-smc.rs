fn main() {
    std::process::exit(dpd_smc::cli::run(std::env::args_os()));
}
