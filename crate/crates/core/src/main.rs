fn main() {
    std::process::exit(rms_core::cli::run_command(std::env::args_os()));
}
