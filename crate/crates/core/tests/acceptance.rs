//! End-to-end acceptance run: one line per criterion, non-zero exit on any
//! unexpected failure.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use fringe_core::dist::{
    birth_marginal, birth_stopped_law, hg_factorial_moment, hg_factorial_moment_formula, hg_pmf, BirthRates, HGParams,
};
use fringe_core::exact::{int, parse_rational, rat, to_f64, Rational};
use fringe_core::models::ModelSpec;
use fringe_core::protected::{ancestor_constants, denominator_prime_check, p2_closed, p_protected};
use fringe_core::sim::{grow, grow_fragmentation_fringe, replication_rng, stats, SimTree, StopRule, TreeStats};
use fringe_core::theory::{
    depth_and_pathlength, fragmentation_constants, gamma_height, gamma_saturation, key_count_law,
};
use fringe_core::verify::{chi_square, exact_oracle, mean_se, observe, OracleStatistic};
use num_traits::One;
use quadrature::double_exponential::integrate;
use rayon::prelude::*;

const N: u64 = 100_000;
const REPS: u64 = 100;
const SEED: u64 = 20_240_601;

/// What the criteria need from one grown tree.
struct Rep {
    st: TreeStats,
    weight: u64,
    /// Outdegree of the node owning a uniformly random key, as counts over keys.
    owner_degree: BTreeMap<i64, u64>,
    /// Key count of that node, as counts over keys.
    owner_keys: BTreeMap<i64, u64>,
}

impl Rep {
    fn of(tree: &SimTree) -> Self {
        let (mut owner_degree, mut owner_keys) = (BTreeMap::new(), BTreeMap::new());
        for v in &tree.nodes {
            let k = v.key_count as u64;
            if k > 0 {
                *owner_degree.entry(v.children.len() as i64).or_insert(0) += k;
                *owner_keys.entry(v.key_count as i64).or_insert(0) += k;
            }
        }
        Rep {
            st: stats(tree, 4),
            weight: tree.total_weight,
            owner_degree,
            owner_keys,
        }
    }

    fn nodes(&self) -> f64 {
        self.st.node_count as f64
    }
}

#[derive(Default)]
struct Cache {
    runs: HashMap<(String, u64, u64), Vec<Rep>>,
}

impl Cache {
    fn reps(&mut self, model: &str, n: u64, reps: u64) -> &[Rep] {
        self.runs.entry((model.to_string(), n, reps)).or_insert_with(|| {
            let spec = ModelSpec::parse(model).unwrap();
            (0..reps)
                .into_par_iter()
                .map(|r| {
                    let t = grow(&spec, StopRule::WeightAtLeast(n), &mut replication_rng(SEED, r)).unwrap();
                    Rep::of(&t)
                })
                .collect()
        })
    }
}

struct Outcome {
    pass: bool,
    /// Failure that is understood and left standing.
    expected_failure: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            expected_failure: false,
            detail,
        }
    }
}

fn r(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn merged(reps: &[Rep], f: impl Fn(&Rep) -> Vec<(i64, u64)>) -> BTreeMap<i64, u64> {
    let mut acc = BTreeMap::new();
    for rep in reps {
        for (k, c) in f(rep) {
            *acc.entry(k).or_insert(0) += c;
        }
    }
    acc
}

fn indexed(h: &[u64]) -> Vec<(i64, u64)> {
    h.iter().enumerate().map(|(k, &c)| (k as i64, c)).collect()
}

fn freqs(counts: &BTreeMap<i64, u64>) -> impl Fn(i64) -> f64 + '_ {
    let total = counts.values().sum::<u64>() as f64;
    move |k| counts.get(&k).copied().unwrap_or(0) as f64 / total
}

/// TV between counts and a pmf given on `0..=cut`; mass the pmf puts
/// beyond `cut` (and counts beyond it) enter as one lumped cell.
fn tv(counts: &BTreeMap<i64, u64>, pmf: impl Fn(i64) -> f64, cut: i64) -> f64 {
    let f = freqs(counts);
    let (mut d, mut p_in, mut f_in) = (0.0, 0.0, 0.0);
    for k in 0..=cut {
        d += (pmf(k) - f(k)).abs();
        p_in += pmf(k);
        f_in += f(k);
    }
    0.5 * (d + ((1.0 - p_in) - (1.0 - f_in)).abs())
}

/// TV over `0..=cut` only, as for heavy-tailed fringe laws.
fn tv_window(counts: &BTreeMap<i64, u64>, pmf: impl Fn(i64) -> f64, cut: i64) -> f64 {
    let f = freqs(counts);
    0.5 * (0..=cut).map(|k| (pmf(k) - f(k)).abs()).sum::<f64>()
}

fn c1() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    let table = [(2, 2, "11/30"), (2, 3, "1249/8100"), (3, 2, "19/140"), (4, 2, "54731/1021020"), (5, 2, "3491/145860")];
    for (m, k, want) in table {
        if p_protected(m, k).unwrap() != r(want) {
            bad.push(format!("P_{k}({m})"));
        }
    }
    for m in 2..=10 {
        if p_protected(m, 1).unwrap() != rat(2, m as i64 + 1) {
            bad.push(format!("P_1({m})"));
        }
    }
    for m in 2..=8 {
        if p2_closed(m) != p_protected(m, 2).unwrap() {
            bad.push(format!("closed m={m}"));
        }
    }
    let el = t.elapsed();
    let pass = bad.is_empty() && el < Duration::from_secs(60);
    Outcome::new(pass, format!("5 table values, P_1(2..10), closed form m=2..8 {:?} in {}", bad, secs(el)))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let p42 = p_protected(2, 4).unwrap();
    let p33 = p_protected(3, 3).unwrap();
    let el = t.elapsed();
    let ok42 = p42 == r("103365591157608217/2294809143026400000");
    let ok33 = p33 == r("1550707922167467531619/109171218839281719120000");
    Outcome::new(
        ok42 && ok33 && el < Duration::from_secs(600),
        format!("P_4(2) {} P_3(3) {} in {}", ok42, ok33, secs(el)),
    )
}

fn c3() -> Outcome {
    let t = Instant::now();
    let bst = ModelSpec::parse("bst").unwrap();
    let g = gamma_height(&bst).unwrap().gamma;
    let gm = gamma_saturation(&bst).unwrap().gamma;
    let ge = gamma_height(&ModelSpec::parse("rrt").unwrap()).unwrap().gamma;
    let a = ModelSpec::parse("pyramid").unwrap().alpha().unwrap();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut worst: f64 = 0.0;
    for m in 3..=10 {
        let s = ModelSpec::parse(&format!("mst:{m}")).unwrap();
        worst = worst.max(gamma_height(&s).unwrap().residual.abs());
        worst = worst.max(gamma_saturation(&s).unwrap().residual.abs());
    }
    let el = t.elapsed();
    let pass = (g - 4.311070).abs() <= 1e-5
        && (gm - 0.37336).abs() <= 1e-4
        && (ge - std::f64::consts::E).abs() <= 1e-10
        && (a - golden).abs() <= 1e-12
        && worst < 1e-10
        && el < Duration::from_secs(5);
    Outcome::new(
        pass,
        format!(
            "gamma(bst)={g:.7} gamma_-(bst)={gm:.6} gamma(rrt)-e={:.1e} alpha(pyramid)-golden={:.1e} mst residual {worst:.1e} in {}",
            ge - std::f64::consts::E,
            a - golden,
            secs(el)
        ),
    )
}

fn c4(cache: &mut Cache) -> Outcome {
    let t = Instant::now();
    let s5 = 5f64.sqrt();
    let laws: [(&str, Box<dyn Fn(i64) -> f64>); 4] = [
        ("rrt", Box::new(|k| 0.5f64.powi(k as i32 + 1))),
        ("bst", Box::new(|k| if k <= 2 { 1.0 / 3.0 } else { 0.0 })),
        ("mst:3", Box::new(|k| match k {
            0 => 0.5,
            1..=3 => 1.0 / 6.0,
            _ => 0.0,
        })),
        ("pyramid", Box::new(move |k| match k {
            0 | 2 => (3.0 - s5) / 2.0,
            1 => s5 - 2.0,
            _ => 0.0,
        })),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (model, law) in &laws {
        let counts = merged(cache.reps(model, N, REPS), |r| indexed(&r.st.degree_hist));
        let d = tv(&counts, law, 60);
        pass &= d < 0.01;
        parts.push(format!("{model} {d:.4}"));
    }
    let el = t.elapsed();
    pass &= el < Duration::from_secs(120);
    Outcome::new(pass, format!("degree TV {} in {}", parts.join(", "), secs(el)))
}

fn c5(cache: &mut Cache) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let rrt = merged(cache.reps("rrt", N, REPS), |r| indexed(&r.st.fringe_size_hist));
    let bst = merged(cache.reps("bst", N, REPS), |r| indexed(&r.st.fringe_size_hist));
    let mst = merged(cache.reps("mst:3", N, REPS), |r| indexed(&r.st.fringe_key_hist));
    let harmonic = |k: i64| if k >= 1 { 1.0 / (k * (k + 1)) as f64 } else { 0.0 };
    let binary = |k: i64| if k >= 1 { 2.0 / ((k + 1) * (k + 2)) as f64 } else { 0.0 };
    for (name, counts, law) in [("rrt", &rrt, &harmonic as &dyn Fn(i64) -> f64), ("bst", &bst, &binary), ("mst:3 keys", &mst, &binary)] {
        let d = tv_window(counts, law, 20);
        pass &= d < 0.01;
        parts.push(format!("{name} {d:.4}"));
    }
    Outcome::new(pass, format!("fringe TV over k<=20: {}", parts.join(", ")))
}

fn ratio(reps: &[Rep]) -> f64 {
    reps.iter().map(|r| r.nodes() / r.weight as f64).sum::<f64>() / reps.len() as f64
}

fn c6(cache: &mut Cache) -> Outcome {
    let mst = ratio(cache.reps("mst:3", N, REPS));
    let mst_theory = 1.0 / key_count_law(&ModelSpec::parse("mst:3").unwrap()).unwrap().mean();
    let med = ratio(cache.reps("mstgen:2,1", N, REPS));
    let med_theory = 1.0 / key_count_law(&ModelSpec::parse("mstgen:2,1").unwrap()).unwrap().mean();
    let counts = merged(cache.reps("emst:3", N, REPS), |r| indexed(&r.st.key_count_hist));
    // N_k / |T| -> 1/((k+1)(k+2)) for k < m-1, the rest at k = m-1.
    let nk = |k: i64| match k {
        0 | 1 => 1.0 / ((k + 1) * (k + 2)) as f64,
        2 => 1.0 / 3.0,
        _ => 0.0,
    };
    let d = tv(&counts, nk, 10);
    let pass = (mst / 0.6 - 1.0).abs() <= 0.01
        && (mst_theory - 0.6).abs() < 1e-12
        && (med / (6.0 / 7.0) - 1.0).abs() <= 0.01
        && (med_theory - 6.0 / 7.0).abs() < 1e-12
        && d < 0.01;
    Outcome::new(pass, format!("mst:3 nodes/n {mst:.5} (3/5), emst:3 key-count TV {d:.4}, mstgen:2,1 nodes/n {med:.5} (6/7)"))
}

fn protected_fraction(reps: &[Rep]) -> (f64, f64) {
    let xs: Vec<f64> = reps.iter().map(|r| r.st.protected_count(2) as f64 / r.nodes()).collect();
    mean_se(&xs)
}

fn c7(cache: &mut Cache) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for m in 2..=4u32 {
        let (mean, se) = protected_fraction(cache.reps(&format!("mst:{m}"), N, REPS));
        let want = to_f64(&p2_closed(m));
        let z = (mean - want).abs() / se;
        pass &= z <= 3.0;
        parts.push(format!("m={m} {mean:.5} vs {want:.5} (z {z:.2})"));
    }
    let (rrt, _) = protected_fraction(cache.reps("rrt", N, REPS));
    let want = 0.5 - (-1f64).exp();
    pass &= (rrt - want).abs() <= 0.005;
    parts.push(format!("rrt {rrt:.5} vs {want:.5}"));
    Outcome::new(pass, format!("2-protected {}", parts.join(", ")))
}

fn c8(cache: &mut Cache) -> Outcome {
    let c = ancestor_constants();
    let mean = |reps: &[Rep], f: &dyn Fn(&Rep) -> f64| reps.iter().map(f).sum::<f64>() / reps.len() as f64;
    let bst = cache.reps("bst", N, REPS);
    let clades = mean(bst, &|r| r.st.maximal_clade_count.unwrap() as f64 / r.nodes());
    let bst_free = mean(bst, &|r| r.st.unblemished_count as f64 / r.nodes());
    let rrt_free = mean(cache.reps("rrt", N, REPS), &|r| r.st.unblemished_count as f64 / r.nodes());
    let e2 = (-2f64).exp();
    let exact = (c.bst_maximal_clade - (1.0 - e2) / 4.0).abs() < 1e-15
        && (c.bst_no_unary_ancestor - (1.0 - e2) / 2.0).abs() < 1e-15
        && (c.rrt_no_unary_ancestor - (1.0 - (-1f64).exp())).abs() < 1e-15;
    let pass = exact
        && (clades - c.bst_maximal_clade).abs() <= 0.01
        && (bst_free - c.bst_no_unary_ancestor).abs() <= 0.01
        && (rrt_free - c.rrt_no_unary_ancestor).abs() <= 0.01;
    Outcome::new(
        pass,
        format!(
            "bst maximal clades {clades:.4} ({:.4}), bst no unary ancestor {bst_free:.4} ({:.4}), rrt {rrt_free:.4} ({:.4})",
            c.bst_maximal_clade, c.bst_no_unary_ancestor, c.rrt_no_unary_ancestor
        ),
    )
}

fn c9() -> Outcome {
    let samples = 1_000_000u64;
    let draws: Vec<(usize, usize)> = (0..samples / 10_000)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = replication_rng(SEED ^ 9, c);
            (0..10_000)
                .map(|_| {
                    let t = grow_fragmentation_fringe(&mut rng).unwrap();
                    (t.len(), t.nodes[0].children.len())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = samples as f64;
    let p1 = draws.iter().filter(|d| d.0 == 1).count() as f64 / n;
    let p2 = draws.iter().filter(|d| d.0 == 2).count() as f64 / n;
    let mut deg = BTreeMap::new();
    for d in &draws {
        *deg.entry(d.1 as i64).or_insert(0u64) += 1;
    }
    let d = tv(&deg, |k| [0.25, 0.5, 0.25].get(k as usize).copied().unwrap_or(0.0), 4);
    let p2_theory = fragmentation_constants().p_size_two.to_f64();
    let pass = (p1 - 0.25).abs() <= 0.003 && (p2 - 0.17464).abs() <= 0.003 && (p2_theory - 0.17464).abs() < 5e-6 && d < 0.005;
    Outcome::new(pass, format!("P(size=1) {p1:.5}, P(size=2) {p2:.5} (closed {p2_theory:.5}), root degree TV {d:.5}"))
}

/// For every leaf of an extended binary search tree: the number of internal
/// nodes below its parent.
fn leaf_parent_counts(tree: &SimTree) -> Vec<(i64, u64)> {
    let n = tree.len();
    let mut internal = vec![0u64; n];
    for id in (0..n).rev() {
        let v = &tree.nodes[id];
        if !v.children.is_empty() {
            internal[id] += 1;
        }
        if let Some(p) = v.parent {
            internal[p as usize] += internal[id];
        }
    }
    let mut out = BTreeMap::new();
    for v in tree.nodes.iter().filter(|v| v.children.is_empty()) {
        if let Some(p) = v.parent {
            *out.entry(internal[p as usize] as i64).or_insert(0) += 1;
        }
    }
    out.into_iter().collect()
}

fn c10(cache: &mut Cache) -> Outcome {
    let ext = ModelSpec::parse("emst:2").unwrap();
    let per: Vec<Vec<(i64, u64)>> = (0..20)
        .into_par_iter()
        .map(|r| leaf_parent_counts(&grow(&ext, StopRule::WeightAtLeast(N), &mut replication_rng(SEED ^ 10, r)).unwrap()))
        .collect();
    let mut shifted = BTreeMap::new();
    for (x, c) in per.into_iter().flatten() {
        *shifted.entry(x - 1).or_insert(0) += c;
    }
    let law = |j: i64| if j >= 0 { 4.0 / ((j + 1) * (j + 2) * (j + 3)) as f64 } else { 0.0 };
    let d = tv(&shifted, law, 200);
    let mst = cache.reps("mst:3", N, REPS);
    let keys = merged(mst, |r| r.owner_keys.iter().map(|(&k, &c)| (k, c)).collect());
    let degree = merged(mst, |r| r.owner_degree.iter().map(|(&k, &c)| (k, c)).collect());
    let (fk, fd) = (freqs(&keys), freqs(&degree));
    let key_err = [(1, 0.2), (2, 0.8)].iter().map(|&(k, p)| (fk(k) - p).abs()).fold(0.0, f64::max);
    let deg_err = [(0, 0.4), (1, 0.2), (2, 0.2), (3, 0.2)].iter().map(|&(k, p)| (fd(k) - p).abs()).fold(0.0, f64::max);
    let pass = d < 0.01 && key_err <= 0.01 && deg_err <= 0.01;
    Outcome::new(
        pass,
        format!("bst leaf-parent TV {d:.5}; mst:3 key owner keys ({:.4}, {:.4}) degree ({:.4}, {:.4}, {:.4}, {:.4})", fk(1), fk(2), fd(0), fd(1), fd(2), fd(3)),
    )
}

fn c11(cache: &mut Cache) -> Outcome {
    let bst = ModelSpec::parse("bst").unwrap();
    let gamma = gamma_height(&bst).unwrap().normalised;
    let height = |reps: &[Rep]| reps.iter().map(|r| r.st.height as f64 / (r.weight as f64).ln()).sum::<f64>() / reps.len() as f64;
    let mut gaps = Vec::new();
    let mut tvs = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let reps = cache.reps("bst", n, REPS);
        gaps.push((height(reps) / gamma - 1.0).abs());
        let counts = merged(reps, |r| indexed(&r.st.degree_hist));
        tvs.push(tv(&counts, |k| if k <= 2 { 1.0 / 3.0 } else { 0.0 }, 10));
    }
    let rrt_gamma = gamma_height(&ModelSpec::parse("rrt").unwrap()).unwrap().normalised;
    let rrt_gap = (height(cache.reps("rrt", N, REPS)) / rrt_gamma - 1.0).abs();
    let h_ok = rrt_gap <= 0.2;
    let trend = gaps.windows(2).all(|w| w[1] < w[0]) && tvs.windows(2).filter(|w| w[1] > w[0]).count() <= 1 && tvs[2] < tvs[0];

    let rrt = ModelSpec::parse("rrt").unwrap();
    let (depth_c, path_c) = depth_and_pathlength(&rrt).unwrap();
    let reps = cache.reps("rrt", N, REPS);
    let depth = reps.iter().map(|r| r.st.total_path_length as f64 / r.nodes() / r.nodes().ln()).sum::<f64>() / reps.len() as f64;
    let path = reps.iter().map(|r| r.st.total_path_length as f64 / (r.weight as f64 * (r.weight as f64).ln())).sum::<f64>() / reps.len() as f64;
    let depth_err = (depth / depth_c.to_f64() - 1.0).abs();
    let path_err = (path / path_c.to_f64() - 1.0).abs();
    let depth_ok = depth_err <= 0.03;
    let others = h_ok && trend && path_err <= 0.05;
    let detail = format!(
        "rrt H/ln n off by {:.1}%; bst H/ln n off by {:.1}% (gaps {:.3}/{:.3}/{:.3}, degree TV {:.4}/{:.4}/{:.4}); rrt depth/ln n {depth:.4} off by {:.2}% [limit 3%]; rrt path length off by {:.2}%",
        100.0 * rrt_gap,
        100.0 * gaps[2],
        gaps[0],
        gaps[1],
        gaps[2],
        tvs[0],
        tvs[1],
        tvs[2],
        100.0 * depth_err,
        100.0 * path_err
    );
    // E depth = H_n - 1 puts depth/ln n at 0.9635 for n = 1e5, a bias the
    // 3% window cannot absorb.
    let bias = (1..=N).map(|k| 1.0 / k as f64).sum::<f64>() - 1.0;
    Outcome {
        pass: others && depth_ok,
        expected_failure: others && !depth_ok && (bias / (N as f64).ln() - 1.0).abs() > 0.03,
        detail: format!("{detail}; finite-n mean (H_n-1)/ln n = {:.4}", bias / (N as f64).ln()),
    }
}

fn c12() -> Outcome {
    let stat = OracleStatistic::LeavesAndProtected2;
    let cases: Vec<(&str, usize)> = (1..=7).map(|n| ("bst", n)).chain((1..=6).map(|n| ("mst:3", n))).collect();
    let mut worst = (1.0f64, String::new());
    let mut pass = true;
    for (model, n) in cases {
        let spec = ModelSpec::parse(model).unwrap();
        let law = exact_oracle(&spec, n, stat).unwrap();
        let values: Vec<i64> = (0..100u64)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = replication_rng(SEED ^ 12 ^ n as u64, c + if model == "bst" { 0 } else { 1 << 20 });
                let spec = &spec;
                (0..10_000)
                    .map(move |_| observe(&grow(spec, StopRule::WeightAtLeast(n as u64), &mut rng).unwrap(), n, stat))
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut counts = BTreeMap::new();
        for v in values {
            *counts.entry(v).or_insert(0u64) += 1;
        }
        let chi = chi_square(&law, &counts);
        pass &= chi.p_value > 0.001;
        if chi.p_value < worst.0 {
            worst = (chi.p_value, format!("{model} n={n}"));
        }
    }
    Outcome::new(pass, format!("13 cases x 1e6 trees, smallest p = {:.4} ({})", worst.0, worst.1))
}

fn c13() -> Outcome {
    let spec = ModelSpec::parse("pa:weights:(k+1)^2").unwrap();
    let fracs: Vec<f64> = (0..10)
        .into_par_iter()
        .map(|r| {
            let t = grow(&spec, StopRule::WeightAtLeast(N), &mut replication_rng(SEED ^ 13, r)).unwrap();
            stats(&t, 0).leaf_count() as f64 / t.len() as f64
        })
        .collect();
    let min = fracs.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome::new(min >= 0.95, format!("leaf fraction over 10 trees >= {min:.5}"))
}

fn c14() -> Outcome {
    let mut failures = Vec::new();
    let mut note = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    // Bounded laws sum to one exactly; moments agree with the closed formula.
    for (a, b, c) in [(-3, 2, -4), (-5, 1, -7), (-4, -6, 3), (-2, 1, -2)] {
        let p = HGParams::from_ints(a, b, c).unwrap();
        let n = p.support_max().unwrap();
        let total: Rational = (0..=n).map(|k| hg_pmf(&p, k).as_exact().cloned().unwrap()).sum();
        note(total == Rational::one(), format!("HG({a},{b};{c}) sum"));
        for m in 1..4 {
            note(hg_factorial_moment(&p, m) == hg_factorial_moment_formula(&p, m), format!("HG({a},{b};{c}) moment {m}"));
        }
    }
    // Unbounded laws: the listed mass reaches 1 within the truncation.
    for (a, b, c) in [(1, 1, 4), (2, 3, 9), (1, 2, 6)] {
        let law = fringe_core::dist::hg_law(&HGParams::from_ints(a, b, c).unwrap());
        note((law.total() - 1.0).abs() < 2e-9, format!("HG({a},{b};{c}) total"));
    }
    // Finite pure-birth laws are exact distributions.
    let finite = birth_stopped_law(&BirthRates::Explicit(vec![int(4), int(3), int(1), int(0)]), &rat(3, 2)).unwrap();
    note(finite.exact_total() == Some(Rational::one()), "finite birth law".into());
    // Mixtures of binomials over a beta law are hypergeometric.
    for (m, a, b) in [(3i64, 2.0, 3.0), (5, 1.0, 1.0)] {
        let p = HGParams::new(int(-m), rat((a * 2.0) as i64, 2), int(1) - rat((b * 2.0) as i64, 2) - int(m)).unwrap();
        let lb = statrs::function::beta::ln_beta(a, b).exp();
        for k in 0..=m {
            let binom = statrs::function::factorial::binomial(m as u64, k as u64);
            let f = |q: f64| binom * q.powi(k as i32) * (1.0 - q).powi((m - k) as i32) * q.powf(a - 1.0) * (1.0 - q).powf(b - 1.0) / lb;
            let got = integrate(f, 0.0, 1.0, 1e-14).integral;
            note((got - hg_pmf(&p, k as u64).to_f64()).abs() < 1e-10, format!("Bin({m}) mixture k={k}"));
        }
    }
    // Stopping the time marginals at Exp(alpha) reproduces the stopped law.
    for (chi, rho, alpha) in [(1i64, 1i64, 1i64), (-1, 3, 2)] {
        let law = birth_stopped_law(&BirthRates::linear(int(chi), int(rho)).unwrap(), &int(alpha)).unwrap();
        for k in 0..6u64 {
            let got = integrate(
                |u: f64| if u <= 0.0 { 0.0 } else { birth_marginal(&int(chi), &int(rho), -u.ln() / alpha as f64, k) },
                0.0,
                1.0,
                1e-13,
            )
            .integral;
            note((got - law.prob(k as i64)).abs() < 1e-8, format!("marginal chi={chi} k={k}"));
        }
    }
    // Every computed protected fraction has a smooth denominator.
    let mut checked = 0;
    for (m, kmax) in [(2u32, 5u32), (3, 3), (4, 2), (5, 2), (6, 2), (7, 2), (8, 2), (9, 1), (10, 1)] {
        for k in 1..=kmax {
            let v = p_protected(m, k).unwrap();
            note(denominator_prime_check(m, k, &v), format!("denominator P_{k}({m})"));
            checked += 1;
        }
    }
    Outcome::new(failures.is_empty(), format!("invariant suite {:?}, {checked} denominators checked", failures))
}

fn main() {
    let start = Instant::now();
    let mut cache = Cache::default();
    let names = [
        "exact protected table",
        "large protected values",
        "height and saturation constants",
        "degree laws by simulation",
        "fringe-size laws",
        "node and key ratios",
        "protected fractions by simulation",
        "ancestor properties",
        "fragmentation fringe",
        "restricted sampling",
        "slow-convergence properties",
        "oracle equivalence",
        "explosive preferential attachment",
        "appendix identities",
    ];
    let mut unexpected = 0;
    let mut expected = 0;
    for (i, name) in names.iter().enumerate() {
        let t = Instant::now();
        let o = match i + 1 {
            1 => c1(),
            2 => c2(),
            3 => c3(),
            4 => c4(&mut cache),
            5 => c5(&mut cache),
            6 => c6(&mut cache),
            7 => c7(&mut cache),
            8 => c8(&mut cache),
            9 => c9(),
            10 => c10(&mut cache),
            11 => c11(&mut cache),
            12 => c12(),
            13 => c13(),
            _ => c14(),
        };
        let status = match (o.pass, o.expected_failure) {
            (true, _) => "PASS",
            (false, true) => {
                expected += 1;
                "FAIL (known)"
            }
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {:>2} {:<12} {:<34} {} [{}]", i + 1, status, name, o.detail, secs(t.elapsed()));
    }
    println!(
        "acceptance: {} passed, {} known failure(s), {} unexpected failure(s) in {}",
        names.len() - expected - unexpected,
        expected,
        unexpected,
        secs(start.elapsed())
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
