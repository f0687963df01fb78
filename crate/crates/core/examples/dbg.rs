use brickint_core::*;
use brickint_core::gallery::*;
use brickint_core::rational::{fmt_rat, rat_to_f64, rint};

fn main() {
    let f = FatCantorOscillator::new(8);
    let oracle = f.oracle();
    let t = FatCantorOscillator::ambient();
    let cfg = ProbeConfig::sweep();
    let start = std::time::Instant::now();
    for depth in [6u32, 8, 10] {
        let rep = dis2_cover(&oracle, &t, depth, &cfg, Some(&f)).unwrap();
        println!("k=8 depth {depth}: vol = {} ~ {:.4} ({} cells) [{:?}]",
            fmt_rat(rep.cover.total_volume()), rat_to_f64(rep.cover.total_volume()),
            rep.cover.len(), start.elapsed());
    }
    let verdict = decide_k_integrability(&oracle, &t, &[6, 8, 10], &rint(2), &cfg, Some(&f)).unwrap();
    println!("verdict: {:?} dis2 {:?}", verdict.verdict, verdict.dis2_volumes);
}
