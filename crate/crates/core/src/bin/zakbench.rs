fn main() {
    std::process::exit(zakbench::cli::run(std::env::args_os()));
}
