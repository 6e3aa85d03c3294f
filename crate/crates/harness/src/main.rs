fn main() {
    std::process::exit(raa_harness::cli::run(std::env::args_os()));
}
