fn main() {
    std::process::exit(verdict_loss::run(std::env::args_os()));
}
