fn main() {
    println!("caresim");
}
