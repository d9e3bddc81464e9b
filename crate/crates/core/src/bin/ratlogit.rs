fn main() {
    std::process::exit(ratlogit::cli::run_from(std::env::args_os()));
}
