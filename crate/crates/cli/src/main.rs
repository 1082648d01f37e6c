fn main() {
    std::process::exit(bell_halfline_cli::run(std::env::args_os()));
}
