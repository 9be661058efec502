fn main() {
    std::process::exit(vacq::cli::run(std::env::args_os()));
}
