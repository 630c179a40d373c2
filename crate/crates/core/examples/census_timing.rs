use std::time::Instant;
fn main() {
    let t0 = Instant::now();
    let c = gradplay::lq::sample_census(0.01, 0.1, 1000, 42).unwrap();
    let dt = t0.elapsed();
    println!("1000 samples in {:.2?}: freq={:.4}, counts={:?}, failed={}", dt, c.frequency, c.counts, c.failed);
    let t0 = Instant::now();
    let c = gradplay::lq::sample_census(0.1, 0.1, 1000, 7).unwrap();
    println!("q=0.1: {:.2?}: freq={:.4} failed={}", t0.elapsed(), c.frequency, c.failed);
    let t0 = Instant::now();
    let c = gradplay::lq::sample_census(0.9, 0.1, 1000, 7).unwrap();
    println!("q=0.9: {:.2?}: freq={:.4} failed={}", t0.elapsed(), c.frequency, c.failed);
    let t0 = Instant::now();
    let c = gradplay::lq::sample_census(0.01, 0.9, 1000, 7).unwrap();
    println!("r=0.9: {:.2?}: freq={:.4} failed={}", t0.elapsed(), c.frequency, c.failed);
}
