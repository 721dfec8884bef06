//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use idecomp_core::chaos::{self, GaussianModel, Monomial};
use idecomp_core::diagram::{check_intersection_property_functor, decompose_functor, embed_into_ambient};
use idecomp_core::graphical::{self, DiscreteModel, GibbsState, DEFAULT_FACTOR_TOL};
use idecomp_core::interaction::{
    check_intersection_property, compare_projections, decompose, meet_semilattice_shortcut,
    SubspaceFamily,
};
use idecomp_core::synth;
use idecomp_core::{AmbientSpace, Limits, Poset, Tolerance};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn random_family(rng: &mut ChaCha8Rng, decomposable: bool) -> SubspaceFamily {
    let tol = Tolerance::default();
    let n_elems = rng.gen_range(1..=8);
    let density = rng.gen_range(0.2..0.7);
    let poset = synth::random_poset(rng, n_elems, density);
    let dim = rng.gen_range(2..=16);
    let amb = if rng.gen_bool(0.5) {
        AmbientSpace::euclidean(dim, tol)
    } else {
        AmbientSpace::with_gram(synth::random_spd(rng, dim, 20.0), tol).unwrap()
    };
    let dims = synth::random_piece_dims(rng, n_elems, 3, dim);
    if decomposable {
        synth::decomposable_family(rng, &poset, &amb, &dims).unwrap().family
    } else {
        let eps = rng.gen_range(0.05..0.5);
        synth::perturbed_family(rng, &poset, &amb, &dims, eps).unwrap()
    }
}

fn criterion_1(decomposables: &mut Vec<SubspaceFamily>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1001);
    let start = Instant::now();
    let (mut agree, mut total, mut holds_count) = (0, 0, 0);
    let mut worst_overlap: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    for i in 0..240 {
        let fam = random_family(&mut rng, i % 2 == 0);
        let holds = check_intersection_property(&fam).holds;
        let dec = decompose(&fam);
        total += 1;
        if holds == dec.is_ok() {
            agree += 1;
        }
        if let Ok(d) = &dec {
            holds_count += 1;
            worst_overlap = worst_overlap.max(d.max_overlap);
            worst_recon = worst_recon.max(d.max_reconstruction_gap);
            decomposables.push(fam);
        }
    }
    let elapsed = start.elapsed();
    let ok = agree == total
        && worst_overlap <= 1e-8
        && worst_recon <= 1e-8
        && elapsed < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "{agree}/{total} agree ({holds_count} decomposable), max overlap {worst_overlap:.2e}, \
             max reconstruction gap {worst_recon:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2002);
    let tol = Tolerance::default();
    let start = Instant::now();
    let (mut agree, mut total, mut recovered, mut decomposable) = (0, 0, 0, 0);
    let mut worst_orth: f64 = 0.0;
    for i in 0..120 {
        let n_elems = rng.gen_range(1..=6);
        let density = rng.gen_range(0.2..0.7);
        let poset = synth::random_poset(&mut rng, n_elems, density);
        let dims = synth::random_piece_dims(&mut rng, n_elems, 3, 12);
        let generated = i % 2 == 0;
        let d = if generated {
            synth::direct_sum_diagram(&mut rng, &poset, &dims, tol).unwrap()
        } else {
            let amb = AmbientSpace::euclidean(12, tol);
            let eps = rng.gen_range(0.05..0.5);
            let fam = synth::perturbed_family(&mut rng, &poset, &amb, &dims, eps).unwrap();
            synth::diagram_from_family(&mut rng, &fam, tol).unwrap()
        };
        let holds = check_intersection_property_functor(&d).holds;
        let res = decompose_functor(&d);
        total += 1;
        if holds == res.is_ok() {
            agree += 1;
        }
        if let Ok(fd) = &res {
            decomposable += 1;
            for phi in &fd.phi {
                let k = phi.ncols();
                let dev = (phi.transpose() * phi - DMatrix::identity(k, k)).norm();
                worst_orth = worst_orth.max(dev);
            }
            let fam = embed_into_ambient(fd, tol);
            let round_trip = decompose(&fam).ok().map(|dec| dec.dims()[..n_elems].to_vec());
            let dims_ok = !generated || fd.piece_dims() == dims;
            if dims_ok && round_trip == Some(fd.piece_dims()) {
                recovered += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = agree == total
        && recovered == decomposable
        && worst_orth <= 1e-8
        && elapsed < Duration::from_secs(30);
    outcome(
        ok,
        format!(
            "{agree}/{total} agree, {recovered}/{decomposable} round trips exact, \
             max |phi^T phi - I| {worst_orth:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn factor_families() -> Vec<SubspaceFamily> {
    [&[2usize, 2, 2][..], &[2, 3, 4][..]]
        .iter()
        .map(|c| graphical::factor_family(&DiscreteModel::with_cards(c).unwrap(), Tolerance::default()).unwrap())
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let fams = factor_families();
    let binary = decompose(&fams[0]).unwrap().dims();
    let binary_ok = binary[..8] == [1; 8] && binary[8] == 0 && binary.iter().sum::<usize>() == 8;
    let cards = [2usize, 3, 4];
    let mixed = decompose(&fams[1]).unwrap().dims();
    let mixed_ok = (0..8u32).all(|mask| {
        let expected: usize = (0..3)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| cards[i] - 1)
            .product();
        mixed[mask as usize] == expected
    }) && mixed.iter().sum::<usize>() == 24;
    let elapsed = start.elapsed();
    outcome(
        binary_ok && mixed_ok && elapsed < Duration::from_secs(1),
        format!(
            "binary dims {:?}, (2,3,4) dims {:?}, {:.3}s",
            &binary[..8],
            &mixed[..8],
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4(decomposables: &[SubspaceFamily]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for fam in decomposables.iter().chain(&factor_families()) {
        worst = worst.max(compare_projections(fam).max_difference);
        count += 1;
    }
    let tol = Tolerance::default();
    let p = Poset::from_covers(&["0", "0'", "1"], &[("0", "1"), ("0'", "1")]).unwrap();
    let amb = AmbientSpace::euclidean(2, tol);
    let gens = [
        DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        DMatrix::identity(2, 2),
    ];
    let fam = SubspaceFamily::from_generators(p, amb, &gens).unwrap();
    let cmp = compare_projections(&fam);
    let ok = count > 0 && worst <= 1e-7 && cmp.mobius_sum_gap <= 1e-10 && cmp.orthogonal_sum_gap >= 0.1;
    outcome(
        ok,
        format!(
            "{count} decomposable instances, max |s_a - s_a^perp| {worst:.2e}; counterexample \
             |sum s_a - I| {:.2e}, |sum s_a^perp - I| {:.4}",
            cmp.mobius_sum_gap, cmp.orthogonal_sum_gap
        ),
    )
}

fn markov_chain(rng: &mut ChaCha8Rng) -> GibbsState {
    let cards: Vec<usize> = (0..3).map(|_| rng.gen_range(2..=3)).collect();
    let model = DiscreteModel::with_cards(&cards).unwrap();
    let mut stochastic = |n: usize| {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let p1 = stochastic(cards[0]);
    let t12: Vec<Vec<f64>> = (0..cards[0]).map(|_| stochastic(cards[1])).collect();
    let t23: Vec<Vec<f64>> = (0..cards[1]).map(|_| stochastic(cards[2])).collect();
    let probs = DVector::from_fn(model.size(), |x, _| {
        let s = model.state(x);
        p1[s[0]] * t12[s[0]][s[1]] * t23[s[1]][s[2]]
    });
    let probs = &probs / probs.sum();
    GibbsState::new(model, probs).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5005);
    let (mut passes, mut fails) = (0, 0);
    let mut worst_in: f64 = 0.0;
    let mut weakest_out = f64::INFINITY;
    for _ in 0..20 {
        let p = markov_chain(&mut rng);
        let chain = graphical::factorization_test(&p, &[0b011, 0b110], DEFAULT_FACTOR_TOL).unwrap();
        let singles = graphical::factorization_test(&p, &[0b001, 0b010, 0b100], DEFAULT_FACTOR_TOL).unwrap();
        let rel = chain.max_off_model / p.log_probs().norm();
        worst_in = worst_in.max(rel);
        weakest_out = weakest_out.min(singles.max_off_model);
        if chain.factorizes && rel <= 1e-8 {
            passes += 1;
        }
        if !singles.factorizes && singles.max_off_model >= 1e-3 {
            fails += 1;
        }
    }
    outcome(
        passes == 20 && fails == 20,
        format!(
            "chain model accepted {passes}/20 (max relative off-model norm {worst_in:.2e}), \
             independence rejected {fails}/20 (smallest max norm {weakest_out:.3e})"
        ),
    )
}

/// Probabilists' Hermite coefficients, lowest degree first.
fn hermite_he(m: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..m {
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let limits = Limits::default();
    let tol = Tolerance::default();
    let one = GaussianModel::standard(1);
    let space = chaos::chaos_filtration(&one, 8, &limits, tol).unwrap();
    let pieces = chaos::chaos_pieces(&space).unwrap();
    let mut worst_he: f64 = 0.0;
    for m in 0..=8 {
        let got = chaos::hermite_ito_with(&space, &pieces, &Monomial::new(vec![0; m])).unwrap();
        let he = hermite_he(m);
        for (k, x) in space.monomials().iter().enumerate() {
            let expected = he.get(x.degree()).copied().unwrap_or(0.0);
            worst_he = worst_he.max((got[k] - expected).abs());
        }
    }

    let two = GaussianModel::standard(2);
    let max_deg = 6;
    let space2 = chaos::chaos_filtration(&two, max_deg, &limits, tol).unwrap();
    let pieces2 = chaos::chaos_pieces(&space2).unwrap();
    let mut worst_prod: f64 = 0.0;
    for i in 0..=max_deg {
        for j in 0..=(max_deg - i) {
            let x = Monomial::new(vec![0; i]);
            let y = Monomial::new(vec![1; j]);
            let joint = chaos::hermite_ito_with(&space2, &pieces2, &x.product(&y)).unwrap();
            let hx = chaos::hermite_ito_with(&space2, &pieces2, &x).unwrap();
            let hy = chaos::hermite_ito_with(&space2, &pieces2, &y).unwrap();
            let mut product = DVector::zeros(joint.len());
            for (p, mp) in space2.monomials().iter().enumerate() {
                for (q, mq) in space2.monomials().iter().enumerate() {
                    let c = hx[p] * hy[q];
                    if c != 0.0 && mp.degree() + mq.degree() <= max_deg {
                        product[space2.coordinate(&mp.product(mq)).unwrap()] += c;
                    }
                }
            }
            worst_prod = worst_prod.max((joint - product).amax());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_he <= 1e-8 && worst_prod <= 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "max He_m coefficient error {worst_he:.2e}, max product-rule error {worst_prod:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7007);
    let tol = Tolerance::default();
    let (mut agree, mut holds) = (0, 0);
    for i in 0..50 {
        let k = rng.gen_range(1..=3);
        let items: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let poset = Poset::power_set(&items).unwrap();
        let dim = rng.gen_range(4..=12);
        let amb = AmbientSpace::euclidean(dim, tol);
        let dims = synth::random_piece_dims(&mut rng, poset.len(), 2, dim);
        let fam = if i % 2 == 0 {
            synth::decomposable_family(&mut rng, &poset, &amb, &dims).unwrap().family
        } else {
            let eps = rng.gen_range(0.05..0.5);
            synth::perturbed_family(&mut rng, &poset, &amb, &dims, eps).unwrap()
        };
        let general = check_intersection_property(&fam).holds;
        let shortcut = meet_semilattice_shortcut(&fam).unwrap().holds;
        if general == shortcut {
            agree += 1;
        }
        holds += general as usize;
    }
    outcome(
        agree == 50,
        format!("{agree}/50 agree ({holds} satisfy the intersection property)"),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => {
            println!("{} {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
            o.ok
        }
        Err(_) => {
            println!("FAIL {name}: panicked");
            false
        }
    }
}

fn main() {
    let mut decomposables = Vec::new();
    let results = [
        run("criterion 1 (equivalence, subspace families)", || criterion_1(&mut decomposables)),
        run("criterion 2 (equivalence, isometry diagrams)", criterion_2),
        run("criterion 3 (factor-space piece dimensions)", criterion_3),
        run("criterion 4 (Moebius maps vs orthogonal pieces)", || criterion_4(&decomposables)),
        run("criterion 5 (Gibbs factorization of Markov chains)", criterion_5),
        run("criterion 6 (Hermite-Ito polynomials)", criterion_6),
        run("criterion 7 (meet semi-lattice shortcut)", criterion_7),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
