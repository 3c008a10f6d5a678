//! Built-in reference checks behind `--selftest`: every subcommand verifies
//! a handful of independently known values of its domain and prints one
//! PASS/FAIL line per check.

use contextlab_core::gpt::{
    fcf_fixture_models, fcf_polygon, fcf_witness_exact, fixture_to_secondary, run_fcf_pipeline,
    synthesize_raw_data, FcfSynthesisConfig,
};
use contextlab_core::jm::{
    clifford_jm_threshold, construct_pairwise_joint, find_minimal_incompatible_sets,
    n_wise_necessary, n_wise_necessary_threshold, n_wise_sufficient, n_wise_sufficient_threshold,
    optimal_joint_params, pairwise_compatible, realize_hypergraph_capped, JmHypergraph,
    NoisySpinObservable,
};
use contextlab_core::ks::{
    assignment_polytope, classify_vertices, depolarizing_a, depolarizing_a_exact, ks_colourable,
    noise_threshold, EventHypergraph,
};
use contextlab_core::polytope::{
    enumerate_vertices_capped, rat, rat_int, rat_to_f64, DEFAULT_DIM_CAP,
};
use contextlab_core::quantum::{chsh_value, DensityOperator, DEFAULT_MAX_DIM};
use contextlab_core::specker::{
    cmax_coplanar, eta0_upper_bound, fine_joint_distribution, lsw_bound, nc_bounds_r0r1r2,
    ncycle_quantum_value, optimize_qviol, qviol_closed_form, quantum_witness_ncycle,
    r3_quantum_trine, specker_vertices, FineOutcome, NCycleQuantumConfig, PairwiseStats,
};
use contextlab_core::Error;

use crate::commands::{bell_phi_plus, binary_observable_povm, bob_settings};
use crate::data;

type Check = Result<(), String>;

struct Harness {
    cmd: &'static str,
    failures: usize,
}

impl Harness {
    fn new(cmd: &'static str) -> Self {
        Harness { cmd, failures: 0 }
    }

    fn check(&mut self, name: &str, outcome: Check) {
        match outcome {
            Ok(()) => println!("SELFTEST {}/{name}: PASS", self.cmd),
            Err(detail) => {
                println!("SELFTEST {}/{name}: FAIL - {detail}", self.cmd);
                self.failures += 1;
            }
        }
    }

    fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            2
        }
    }
}

fn near(what: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} (tol {tol})"))
    }
}

fn ensure(cond: bool, what: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn err_str(e: Error) -> String {
    e.to_string()
}

/// Run the reference checks of one subcommand; returns the exit code.
pub fn run(cmd: &str) -> i32 {
    match cmd {
        "jm" => jm(),
        "realize" => realize(),
        "ks" => ks(),
        "specker" => specker(),
        "ncycle" => ncycle(),
        "fcf" => fcf(),
        "qviol-table" => qviol_table(),
        "chsh" => chsh(),
        other => {
            println!("SELFTEST {other}: FAIL - unknown subcommand");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// jm
// ---------------------------------------------------------------------------

fn jm() -> i32 {
    let mut h = Harness::new("jm");
    let x = [1.0, 0.0, 0.0];
    let y = [0.0, 1.0, 0.0];

    h.check("orthogonal-pair-threshold", (|| {
        let at = |eta: f64| -> Result<bool, String> {
            let a = NoisySpinObservable::new(eta, x).map_err(err_str)?;
            let b = NoisySpinObservable::new(eta, y).map_err(err_str)?;
            pairwise_compatible(&a, &b).map_err(err_str)
        };
        ensure(at(1.0 / 2.0f64.sqrt())?, "compatible at 1/sqrt(2)")?;
        ensure(!at(0.7072)?, "incompatible just above 1/sqrt(2)")
    })());

    h.check("trine-pair-threshold", (|| {
        let s = 3.0f64.sqrt() / 2.0;
        let at = |eta: f64| -> Result<bool, String> {
            let a = NoisySpinObservable::new(eta, [0.0, 0.0, 1.0]).map_err(err_str)?;
            let b = NoisySpinObservable::new(eta, [s, 0.0, -0.5]).map_err(err_str)?;
            pairwise_compatible(&a, &b).map_err(err_str)
        };
        ensure(at(0.732)?, "compatible at 0.732")?;
        ensure(!at(0.7321)?, "incompatible at 0.7321")
    })());

    h.check("optimal-joint-orthogonal", (|| {
        let a = NoisySpinObservable::new(0.5, x).map_err(err_str)?;
        let b = NoisySpinObservable::new(0.5, y).map_err(err_str)?;
        let params = optimal_joint_params(&a, &b).map_err(err_str)?;
        near("alpha", params.alpha, 1.0, 1e-12)?;
        let a_len = (params.a_vec.iter().map(|v| v * v).sum::<f64>()).sqrt();
        near("|a|", a_len, 0.5f64.sqrt(), 1e-12)?;
        let joint = construct_pairwise_joint(&a, &b, &params).map_err(err_str)?;
        ensure(joint.n_outcomes() == 4, "joint has 4 outcomes")?;
        // Marginalizing the second outcome must recover the first observable.
        let marg = joint.effect(0).matrix().add(joint.effect(1).matrix());
        let want = a.povm().map_err(err_str)?.effect(0).matrix().clone();
        near("marginal drift", marg.max_abs_diff(&want), 0.0, 1e-12)
    })());

    h.check("clifford-threshold", (|| {
        near("threshold(4)", clifford_jm_threshold(4), 0.5, 1e-15)?;
        near(
            "threshold(2)",
            clifford_jm_threshold(2),
            1.0 / 2.0f64.sqrt(),
            1e-15,
        )
    })());

    h.check("n-wise-threshold-ordering", (|| {
        let s = 3.0f64.sqrt() / 2.0;
        let axes = vec![[0.0, 0.0, 1.0], [s, 0.0, -0.5], [-s, 0.0, -0.5]];
        let nec = n_wise_necessary_threshold(&axes);
        let suf = n_wise_sufficient_threshold(&axes);
        ensure(suf <= nec + 1e-12, format!("sufficient {suf} <= necessary {nec}"))?;
        ensure(n_wise_sufficient(suf - 1e-9, &axes), "sufficient holds below its threshold")?;
        ensure(!n_wise_necessary(nec + 1e-9, &axes), "necessary fails above its threshold")
    })());

    h.exit_code()
}

// ---------------------------------------------------------------------------
// realize
// ---------------------------------------------------------------------------

fn worked_example() -> Result<JmHypergraph, String> {
    JmHypergraph::new(
        4,
        &[vec![0, 1], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]],
    )
    .map_err(err_str)
}

fn realize() -> i32 {
    let mut h = Harness::new("realize");

    h.check("triangle-single-block", (|| {
        let hg = JmHypergraph::new(3, &[vec![0, 1], vec![1, 2], vec![0, 2]]).map_err(err_str)?;
        let minimal = find_minimal_incompatible_sets(&hg);
        ensure(minimal == vec![vec![0, 1, 2]], format!("minimal sets {minimal:?}"))?;
        let r = realize_hypergraph_capped(&hg, DEFAULT_MAX_DIM).map_err(err_str)?;
        ensure(r.blocks.len() == 1, format!("{} blocks", r.blocks.len()))?;
        ensure(r.blocks[0].dim == 2, format!("block dim {}", r.blocks[0].dim))?;
        near("block eta", r.blocks[0].eta, 1.0 / 2.0f64.sqrt(), 1e-12)?;
        ensure(r.povms.len() == 3, format!("{} vertex POVMs", r.povms.len()))?;
        ensure(r.povms.iter().all(|p| p.dim() == 2), "POVMs live in dimension 2")
    })());

    h.check("three-block-example", (|| {
        let hg = worked_example()?;
        let minimal = find_minimal_incompatible_sets(&hg);
        ensure(
            minimal == vec![vec![0, 1, 3], vec![0, 2], vec![1, 2, 3]],
            format!("minimal sets {minimal:?}"),
        )?;
        let r = realize_hypergraph_capped(&hg, DEFAULT_MAX_DIM).map_err(err_str)?;
        ensure(r.blocks.len() == 3, format!("{} blocks", r.blocks.len()))?;
        let dims: Vec<usize> = r.blocks.iter().map(|b| b.dim).collect();
        ensure(dims == vec![2, 2, 2], format!("block dims {dims:?}"))?;
        near("eta of first block", r.blocks[0].eta, 1.0 / 2.0f64.sqrt(), 1e-12)?;
        near("eta of pair block", r.blocks[1].eta, 1.0, 1e-12)?;
        ensure(
            r.povms.iter().all(|p| p.dim() == 6),
            "vertex POVMs live in the direct-sum dimension 6",
        )
    })());

    h.check("complete-trivial-block", (|| {
        let hg = JmHypergraph::new(3, &[vec![0, 1, 2]]).map_err(err_str)?;
        ensure(find_minimal_incompatible_sets(&hg).is_empty(), "no minimal incompatible set")?;
        let r = realize_hypergraph_capped(&hg, DEFAULT_MAX_DIM).map_err(err_str)?;
        ensure(r.blocks.len() == 1, format!("{} blocks", r.blocks.len()))?;
        ensure(r.blocks[0].dim == 1, format!("block dim {}", r.blocks[0].dim))?;
        ensure(r.povms.iter().all(|p| p.dim() == 1), "trivial POVMs in dimension 1")
    })());

    h.check("dimension-cap", (|| {
        let hg = worked_example()?;
        match realize_hypergraph_capped(&hg, 2) {
            Err(Error::ResourceLimit(_)) => Ok(()),
            Err(other) => Err(format!("wrong error kind: {other}")),
            Ok(_) => Err("realization ignored the cap".to_string()),
        }
    })());

    h.exit_code()
}

// ---------------------------------------------------------------------------
// ks
// ---------------------------------------------------------------------------

fn ks() -> i32 {
    let mut h = Harness::new("ks");
    let hg = EventHypergraph::cega18();

    h.check("uncolourable", (|| {
        let colouring = ks_colourable(&hg).map_err(err_str)?;
        ensure(colouring.is_none(), "the 18-class hypergraph admits no 0/1 colouring")
    })());

    let enumerated = enumerate_vertices_capped(&assignment_polytope(&hg), DEFAULT_DIM_CAP)
        .map_err(err_str)
        .and_then(|vs| {
            let classes = classify_vertices(&hg, &vs).map_err(err_str)?;
            Ok((vs, classes))
        });

    h.check("vertex-census", (|| {
        let (vs, classes) = enumerated.as_ref().map_err(Clone::clone)?;
        ensure(vs.len() == 146, format!("{} vertices", vs.len()))?;
        let mut counts = [0usize; 4];
        for c in classes {
            ensure((1..=4).contains(&c.type_id), format!("type {}", c.type_id))?;
            counts[c.type_id - 1] += 1;
        }
        ensure(counts == [24, 36, 36, 50], format!("histogram {counts:?}"))?;
        let averages: Vec<_> = (1..=4)
            .map(|t| {
                classes
                    .iter()
                    .find(|c| c.type_id == t)
                    .map(|c| c.avg_predictability.clone())
                    .ok_or_else(|| format!("no vertex of type {t}"))
            })
            .collect::<Result<_, _>>()?;
        let want = [rat(5, 6), rat(13, 18), rat(11, 18), rat(1, 2)];
        ensure(averages == want, "type averages are 5/6, 13/18, 11/18, 1/2")
    })());

    h.check("witness-vertex", (|| {
        let (vs, classes) = enumerated.as_ref().map_err(Clone::clone)?;
        let half = rat(1, 2);
        let mut expected = vec![rat_int(0); 18];
        for k in [0, 4, 14] {
            expected[k] = rat_int(1);
        }
        for k in [8, 9, 10] {
            expected[k] = half.clone();
        }
        let idx = vs
            .iter()
            .position(|v| *v == expected)
            .ok_or("the three-half-weight witness vertex is missing")?;
        ensure(
            classes[idx].witness_cycle == vec![8, 9, 10],
            format!("witness cycle {:?}", classes[idx].witness_cycle),
        )?;
        ensure(classes[idx].avg_predictability == rat(5, 6), "witness average is 5/6")
    })());

    h.check("noise-threshold", (|| {
        ensure(noise_threshold() == rat(7, 9), "threshold is 7/9")?;
        let a = depolarizing_a_exact(&noise_threshold(), &rat_int(1)).map_err(err_str)?;
        ensure(a == rat(5, 6), format!("a at threshold is {a}, want 5/6"))?;
        near("noiseless a", depolarizing_a(1.0, 1.0).map_err(err_str)?, 1.0, 1e-15)
    })());

    h.check("ray-table", (|| {
        let rays = data::cega18_rays().map_err(err_str)?;
        ensure(rays.rays.len() == 18, format!("{} rays", rays.rays.len()))?;
        ensure(
            rays.measurements == hg.measurements(),
            "ray bases match the hypergraph measurements",
        )?;
        let pvms = data::cega18_pvms().map_err(err_str)?;
        ensure(pvms.len() == 9, format!("{} bases", pvms.len()))?;
        ensure(
            pvms.iter().all(|p| p.dim() == 4 && p.is_projective(1e-12)),
            "all bases are projective in dimension 4",
        )
    })());

    h.exit_code()
}

// ---------------------------------------------------------------------------
// specker
// ---------------------------------------------------------------------------

fn specker() -> i32 {
    let mut h = Harness::new("specker");

    h.check("vertex-count", (|| {
        let vs = specker_vertices();
        ensure(vs.len() == 12, format!("{} vertices", vs.len()))?;
        let det = vs.iter().filter(|v| v.iter().all(|x| x.is_integer())).count();
        ensure(det == 8, format!("{det} deterministic vertices"))?;
        let half = rat(1, 2);
        for w in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]] {
            let mut v: Vec<_> = w.iter().map(|&x| rat_int(x)).collect();
            v.extend([half.clone(), half.clone(), half.clone()]);
            ensure(vs.contains(&v), format!("indeterministic vertex {w:?} present"))?;
        }
        Ok(())
    })());

    h.check("bounds", (|| {
        let lsw = lsw_bound(2.0 / 3.0).map_err(err_str)?;
        near("LSW averaged at 2/3", lsw.averaged, 7.0 / 9.0, 1e-12)?;
        near("LSW summed at 2/3", lsw.summed, 3.0 - 2.0 / 3.0, 1e-12)?;
        let ncb = nc_bounds_r0r1r2(2.0 / 3.0).map_err(err_str)?;
        near("R-bound summed at 2/3", ncb.summed, 1.0 / 3.0, 1e-12)
    })());

    h.check("cmax-closed-form", (|| {
        let c = cmax_coplanar(2.0 / 3.0, [-0.5, -0.5, -0.5]).map_err(err_str)?;
        near("C at 2/3", c, 13.0f64.sqrt() / 3.0 - 1.0, 1e-9)?;
        near("S at 2/3", c / 6.0, 0.03364, 1e-4)
    })());

    h.check("weak-regime", (|| {
        near(
            "R3 quantum at 0.4566",
            r3_quantum_trine(0.4566).map_err(err_str)?,
            0.9374,
            1e-4,
        )?;
        let c = cmax_coplanar(0.4566, [-0.5, -0.5, -0.5]).map_err(err_str)?;
        near("S at 0.4566", c / 6.0, 0.0896, 1e-4)
    })());

    h.check("fine-joint", (|| {
        let no = PairwiseStats::specker(1.0, 1.0, 1.0, 0.5, 0.5, 0.5).map_err(err_str)?;
        match fine_joint_distribution(&no).map_err(err_str)? {
            FineOutcome::NoJoint { violated } => {
                ensure(violated == "R3 <= 2", format!("violated {violated}"))?
            }
            FineOutcome::Joint(_) => return Err("perfect anticorrelation has no joint".into()),
        }
        let yes = PairwiseStats::specker(0.5, 0.5, 0.5, 0.5, 0.5, 0.5).map_err(err_str)?;
        match fine_joint_distribution(&yes).map_err(err_str)? {
            FineOutcome::Joint(q) => {
                ensure(q.len() == 8, format!("{} entries", q.len()))?;
                near("joint normalization", q.iter().sum::<f64>(), 1.0, 1e-12)
            }
            FineOutcome::NoJoint { violated } => {
                Err(format!("uniform statistics rejected: {violated}"))
            }
        }
    })());

    h.exit_code()
}

// ---------------------------------------------------------------------------
// ncycle
// ---------------------------------------------------------------------------

fn check_optimum_n3() -> Check {
    let opt = optimize_qviol(3).map_err(err_str)?;
    near("max violation", opt.max_qviol, 0.1793, 1e-3)?;
    near("optimal eta0", opt.optimal_eta0, 0.4566, 1e-3)?;
    near("critical eta0", opt.critical_eta0, 0.6981, 1e-3)?;
    near("upper bound", opt.eta0_upper, 3.0f64.sqrt() - 1.0, 1e-9)
}

fn born_consistency(n: usize, eta0: f64) -> Check {
    let cfg = NCycleQuantumConfig::default_for(n, eta0).map_err(err_str)?;
    let rep = quantum_witness_ncycle(&cfg).map_err(err_str)?;
    near(
        "Born witness vs closed form",
        rep.witness_value,
        ncycle_quantum_value(n, eta0),
        1e-10,
    )?;
    near("average predictability", rep.eta_ave, eta0, 1e-10)?;
    near(
        "violation vs closed form",
        rep.witness_value - rep.nc_bound,
        qviol_closed_form(n, eta0),
        1e-10,
    )
}

fn ncycle() -> i32 {
    let mut h = Harness::new("ncycle");
    h.check("optimum-n3", check_optimum_n3());
    h.check("born-consistency-odd", born_consistency(5, 0.5));
    h.check("born-consistency-even", born_consistency(4, 0.5));
    h.check("upper-bound-n4", near("eta0 cap", eta0_upper_bound(4), 0.7653, 1e-4));
    h.exit_code()
}

// ---------------------------------------------------------------------------
// fcf
// ---------------------------------------------------------------------------

fn fcf() -> i32 {
    let mut h = Harness::new("fcf");

    h.check("fixtures-exact", (|| {
        let (boundary, contextual) = fcf_fixture_models();
        let s1 = fixture_to_secondary(&boundary).map_err(err_str)?;
        let (a1, v1) = fcf_witness_exact(&s1).map_err(err_str)?;
        ensure(a1 == rat(5, 6), format!("boundary witness {a1}, want 5/6"))?;
        ensure(!v1, "the boundary model does not violate")?;
        let s2 = fixture_to_secondary(&contextual).map_err(err_str)?;
        let (a2, v2) = fcf_witness_exact(&s2).map_err(err_str)?;
        ensure(a2 == rat(9, 10), format!("contextual witness {a2}, want 9/10"))?;
        ensure(v2, "the contextual model violates")
    })());

    h.check("polygon", (|| {
        let vs = fcf_polygon().map_err(err_str)?;
        ensure(vs.len() == 6, format!("{} vertices", vs.len()))?;
        let vals = [rat_int(1), rat(1, 2), rat_int(0)];
        for p in [
            [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ] {
            let v: Vec<_> = p.iter().map(|&i| vals[i].clone()).collect();
            ensure(vs.contains(&v), format!("permutation {v:?} present"))?;
        }
        Ok(())
    })());

    h.check("ideal-pipeline", (|| {
        let config = FcfSynthesisConfig { p1: 1.0, p2: 1.0, counts: None };
        let raw = synthesize_raw_data(&config, 0).map_err(err_str)?;
        let rep = run_fcf_pipeline(&raw, 3).map_err(err_str)?;
        near("ideal witness", rep.a_prime, 1.0, 1e-10)?;
        ensure(rep.violated, "the ideal witness violates")?;
        ensure(rep.chi2 <= 1e-9, format!("chi2 {} is tiny", rep.chi2))?;
        ensure(
            rat_to_f64(rep.secondary.c_p()) >= 0.999 && rat_to_f64(rep.secondary.c_m()) >= 0.999,
            "secondary self-weights near 1",
        )
    })());

    h.exit_code()
}

// ---------------------------------------------------------------------------
// qviol-table
// ---------------------------------------------------------------------------

fn qviol_table() -> i32 {
    let mut h = Harness::new("qviol-table");
    h.check("row-n3", check_optimum_n3());
    h.check("flat-optimum-n12", (|| {
        let opt = optimize_qviol(12).map_err(err_str)?;
        near("optimal eta0", opt.optimal_eta0, 0.6844, 1e-3)?;
        near("max violation", opt.max_qviol, 0.0841, 1e-3)?;
        near(
            "flatness near the optimum",
            qviol_closed_form(12, 0.6822),
            opt.max_qviol,
            3e-6,
        )
    })());
    h.check("row-n100", (|| {
        let opt = optimize_qviol(100).map_err(err_str)?;
        near("max violation", opt.max_qviol, 0.0159, 1e-3)?;
        near("optimal eta0", opt.optimal_eta0, 0.8887, 1e-3)
    })());
    h.exit_code()
}

// ---------------------------------------------------------------------------
// chsh
// ---------------------------------------------------------------------------

fn chsh() -> i32 {
    let mut h = Harness::new("chsh");
    let settings = (|| -> Result<_, String> {
        let [sx, _, sz] = contextlab_core::quantum::pauli();
        let a0 = binary_observable_povm(&sz).map_err(err_str)?;
        let a1 = binary_observable_povm(&sx).map_err(err_str)?;
        let (b0, b1) = bob_settings(std::f64::consts::FRAC_PI_4).map_err(err_str)?;
        Ok((a0, a1, b0, b1))
    })();

    h.check("tsirelson", (|| {
        let (a0, a1, b0, b1) = settings.as_ref().map_err(Clone::clone)?;
        let state = bell_phi_plus().map_err(err_str)?;
        let v = chsh_value(&state, (a0, a1), (b0, b1)).map_err(err_str)?;
        near("CHSH at the optimal settings", v, 2.0 * 2.0f64.sqrt(), 1e-10)
    })());

    h.check("maximally-mixed", (|| {
        let (a0, a1, b0, b1) = settings.as_ref().map_err(Clone::clone)?;
        let state = DensityOperator::maximally_mixed(4);
        let v = chsh_value(&state, (a0, a1), (b0, b1)).map_err(err_str)?;
        near("CHSH on white noise", v, 0.0, 1e-12)
    })());

    h.check("classical-angle", (|| {
        let (a0, a1, _, _) = settings.as_ref().map_err(Clone::clone)?;
        let state = bell_phi_plus().map_err(err_str)?;
        let (b0, b1) = bob_settings(0.0).map_err(err_str)?;
        let v = chsh_value(&state, (a0, a1), (&b0, &b1)).map_err(err_str)?;
        near("CHSH at angle zero", v, 2.0, 1e-12)
    })());

    h.exit_code()
}
