//! Speed of planar solitons as a function of propagation angle.

use nvlab::planar::speed_profile;

fn main() {
    for s in speed_profile(1.0, 24) {
        let bar = "#".repeat((20.0 * (s.speed + 1.0)).round() as usize);
        println!("{:6.1}°  {:+.4}  {bar}", s.alpha.to_degrees(), s.speed);
    }
}
