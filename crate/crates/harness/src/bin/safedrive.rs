fn main() {
    std::process::exit(safedrive_harness::cli::main_with(std::env::args_os()));
}
