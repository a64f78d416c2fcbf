fn main() {
    std::process::exit(rrforensics::run(std::env::args_os()));
}
