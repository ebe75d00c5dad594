fn main() {
    std::process::exit(solenoid_cli::run(std::env::args_os()));
}
