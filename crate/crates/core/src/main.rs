fn main() {
    std::process::exit(fishpose::cli::run(std::env::args_os()));
}
