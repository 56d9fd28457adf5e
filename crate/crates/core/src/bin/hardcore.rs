fn main() {
    std::process::exit(hardcore::cli::dispatch(std::env::args_os()));
}
