use nevdiff::expr::{parse_expr, MeromorphicMap};
use nevdiff::nevanlinna::jensen_residual;
use nevdiff::quad::QuadConfig;
use std::time::Instant;

fn main() {
    let f = MeromorphicMap::new(1,
        parse_expr("z1-0.3333333333").unwrap(),
        parse_expr("z1-0.5").unwrap()).unwrap();
    let cfg = QuadConfig::default();
    for r in [0.5, 3.6666666, 6.83333, 10.0] {
        let t0 = Instant::now();
        let res = jensen_residual(&f, r, &cfg).unwrap();
        println!("r={r}: residual={res:.2e} elapsed={:?}", t0.elapsed());
    }
}
