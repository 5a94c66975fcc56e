fn main() { std::process::exit(berezin_sphere::cli::main_entry()); }
