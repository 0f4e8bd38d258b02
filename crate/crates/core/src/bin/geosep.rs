fn main() {
    std::process::exit(geosep::cli::run(std::env::args_os()));
}
