fn main() {
    std::process::exit(biomatch_cli::dispatch(std::env::args_os()));
}
