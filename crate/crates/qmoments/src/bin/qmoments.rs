fn main() { qmoments::cli::main() }
