use seqspec_core::limits::debug_cov_at_radii;
use seqspec_core::mp::SpectralFn;

fn neville(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut t = ys.to_vec();
    for l in 1..n {
        for i in 0..n - l {
            t[i] = (-xs[i + l] * t[i] + xs[i] * t[i + 1]) / (xs[i] - xs[i + l]);
        }
    }
    t[0]
}

fn probe(name: &str, f: SpectralFn, t1: f64, t2: f64, y: f64, want: f64) {
    let ds = [0.02_f64, 0.01, 0.005, 0.0025];
    let js: Vec<f64> = ds
        .iter()
        .map(|&d| debug_cov_at_radii(f, f, t1, t2, y, 1.0 + d, 1.0 + 2.0 * d, 4096).0)
        .collect();
    let ex = neville(&ds, &js);
    println!("{name}: J = {js:?}");
    println!("   extrap = {ex:.6}, want = {want:.6}, err = {:+.2e}", ex - want);
}

fn main() {
    // diagonal cases
    probe("diag id   t=0.7 y=.35", SpectralFn::Identity, 0.7, 0.7, 0.35, 2.0 * 0.35 * 0.7);
    let t = 0.7; let y = 0.35;
    let sq_diag = 4.0 * t * y * (2.0 * t * t + (t + 4.0 * t) * y + 2.0 * y * y);
    probe("diag sq   t=0.7 y=.35", SpectralFn::Square, t, t, y, sq_diag);
    probe("diag log  t=0.75 y=.25", SpectralFn::Log, 0.75, 0.75, 0.25, -2.0 * (1.0_f64 - 0.25 / 0.75).ln());
    // off-diagonal
    probe("off  id   1/0.5 y=.2", SpectralFn::Identity, 1.0, 0.5, 0.2, 2.0 * 0.2 * 0.5);
    let (t1, t2, y) = (1.0, 0.5, 0.2);
    let m = t2;
    let sq_off = 4.0 * m * y * (2.0 * t1 * t2 + (m + 2.0 * (t1 + t2)) * y + 2.0 * y * y);
    probe("off  sq   1/0.5 y=.2", SpectralFn::Square, t1, t2, y, sq_off);
    probe("off  log  1/0.7 y=.3", SpectralFn::Log, 1.0, 0.7, 0.3, -2.0 * (1.0_f64 - 0.3).ln());
}
