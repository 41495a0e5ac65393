//! Acceptance criteria 1 through 9, run in order with one pass/fail line each.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use half::f16;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use evosim::adam::infer;
use evosim::eve::allocate_pes;
use evosim::gene::{
    canonicalize, decode_gene, encode_gene, quantize_half, Activation, Aggregation, ConnectionGene,
    EncodedGene, Gene, Genome, NodeGene,
};
use evosim::harness::{
    run_evolve, run_sweep, stats_csv, GenRecord, ReproMode, RunConfig, SweepAxis,
};
use evosim::interconnect::{parent_traffic, plan_fetch, HwConfig, NocMode};
use evosim::neat::{Mating, MatingPlan};

type Check = std::result::Result<String, String>;

const MIB: u64 = 1 << 20;
const ACTIVATIONS: [Activation; 4] = [
    Activation::Identity,
    Activation::Sigmoid,
    Activation::Tanh,
    Activation::Relu,
];
const AGGREGATIONS: [Aggregation; 5] = [
    Aggregation::Sum,
    Aggregation::Product,
    Aggregation::Max,
    Aggregation::Min,
    Aggregation::Mean,
];

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bundled() -> Vec<(String, RunConfig)> {
    ["cartpole", "mountaincar", "xor"]
        .iter()
        .map(|name| {
            let path = configs_dir().join(format!("{name}.json"));
            let mut config =
                RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            config.run.output_dir = None;
            config.run.write_populations = false;
            (name.to_string(), config)
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. codec

fn finite_half_bits(rng: &mut StdRng) -> u16 {
    loop {
        let b: u16 = rng.gen();
        if (b >> 10) & 0x1f != 0x1f {
            return b;
        }
    }
}

fn finite_single_bits(rng: &mut StdRng) -> u32 {
    loop {
        let b: u32 = rng.gen();
        if (b >> 23) & 0xff != 0xff {
            return b;
        }
    }
}

fn codec_round_trip() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let n = 100_000;
    for i in 0..n {
        let (gene, expected) = if i % 2 == 0 {
            let id: u16 = rng.gen_range(0..=0x7fff);
            let (b, r) = (finite_half_bits(&mut rng), finite_half_bits(&mut rng));
            let (act, agg) = (rng.gen_range(0..4u64), rng.gen_range(0..5u64));
            let node = NodeGene {
                id,
                bias: f16::from_bits(b).to_f32(),
                response: f16::from_bits(r).to_f32(),
                activation: ACTIVATIONS[act as usize],
                aggregation: AGGREGATIONS[agg as usize],
            };
            let word =
                (id as u64) << 48 | (b as u64) << 32 | (r as u64) << 16 | act << 12 | agg << 8;
            (Gene::Node(node), word)
        } else {
            let (src, dst): (u16, u16) = (rng.gen_range(0..=0x7fff), rng.gen_range(0..=0x7fff));
            let enabled: bool = rng.gen();
            let w = finite_single_bits(&mut rng);
            let conn = ConnectionGene {
                src,
                dst,
                weight: f32::from_bits(w),
                enabled,
            };
            let word = 1 << 63
                | (enabled as u64) << 62
                | (src as u64) << 47
                | (dst as u64) << 32
                | w as u64;
            (Gene::Connection(conn), word)
        };
        let encoded = encode_gene(&gene).map_err(|e| format!("gene {i}: {e}"))?;
        ensure(encoded == EncodedGene(expected), || {
            format!("gene {i}: {encoded:?} != {:#018x}", expected)
        })?;
        let decoded = decode_gene(encoded).map_err(|e| format!("gene {i}: {e}"))?;
        let same = match (&decoded, &gene) {
            (Gene::Node(a), Gene::Node(b)) => {
                a.id == b.id
                    && a.bias.to_bits() == b.bias.to_bits()
                    && a.response.to_bits() == b.response.to_bits()
                    && a.activation == b.activation
                    && a.aggregation == b.aggregation
            }
            (Gene::Connection(a), Gene::Connection(b)) => {
                a.key() == b.key()
                    && a.enabled == b.enabled
                    && a.weight.to_bits() == b.weight.to_bits()
            }
            _ => false,
        };
        ensure(same, || {
            format!("gene {i}: decoded {decoded:?}, expected {gene:?}")
        })?;
    }
    Ok(format!("{n} genes bit-exact"))
}

// ---------------------------------------------------------------------------
// 2 and 6. streaming path against the reference path

fn compare_runs() -> (Check, Check) {
    let mut generations = 0;
    let mut footprint_max = 0;
    let mut dram = 0;
    let budgets = [167, 167, 166];
    for ((name, mut config), budget) in bundled().into_iter().zip(budgets) {
        config.run.reproduction = ReproMode::Both;
        config.run.stop_on_target = false;
        config.run.max_generations = budget;
        config.run.seed = 7;
        match run_evolve(&config) {
            Ok(outcome) => {
                generations += outcome.records.len();
                for r in &outcome.records {
                    footprint_max = footprint_max.max(r.footprint_bytes);
                    dram += r.dram_reads;
                }
            }
            Err(e) => {
                let msg = format!("{name}: {e}");
                return (Err(msg.clone()), Err(msg));
            }
        }
    }
    let equivalence = if generations == 500 {
        Ok(format!(
            "{generations} generations, every child identical on both paths"
        ))
    } else {
        Err(format!("only {generations} generations ran"))
    };
    let detail = format!("max footprint {footprint_max} bytes, {dram} DRAM reads");
    let memory = if footprint_max < MIB && dram == 0 {
        Ok(detail)
    } else {
        Err(detail)
    };
    (equivalence, memory)
}

// ---------------------------------------------------------------------------
// 3. packed inference against a scalar topological evaluation

fn random_genome(rng: &mut StdRng) -> Genome {
    let ni: u16 = rng.gen_range(1..=5);
    let no: u16 = rng.gen_range(1..=3);
    let hidden: u16 = rng.gen_range(0..=8);
    let mut order: Vec<u16> = (ni..ni + no)
        .chain((0..hidden).map(|h| ni + no + 2 * h + 1))
        .collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut node = |id| NodeGene {
        id,
        bias: quantize_half(rng.gen_range(-2.0..2.0)),
        response: quantize_half(rng.gen_range(-2.0..2.0)),
        activation: ACTIVATIONS[rng.gen_range(0..4)],
        aggregation: AGGREGATIONS[rng.gen_range(0..5)],
    };
    let nodes: Vec<NodeGene> = (0..ni)
        .chain(order.iter().copied())
        .map(&mut node)
        .collect();
    let sources: Vec<u16> = (0..ni).chain(order.iter().copied()).collect();
    let density = rng.gen_range(0.2..0.8);
    let mut connections = Vec::new();
    for (j, &dst) in order.iter().enumerate() {
        for &src in &sources[..ni as usize + j] {
            if rng.gen_bool(density) {
                connections.push(ConnectionGene {
                    src,
                    dst,
                    weight: rng.gen_range(-3.0f32..3.0),
                    enabled: rng.gen_bool(0.85),
                });
            }
        }
    }
    canonicalize(Genome {
        genome_id: 0,
        nodes,
        connections,
        num_inputs: ni,
        num_outputs: no,
        fitness: None,
    })
    .expect("generated genome is acyclic")
}

fn oracle_value(g: &Genome, id: u16, obs: &[f64], memo: &mut BTreeMap<u16, f64>) -> f64 {
    if id < g.num_inputs {
        return obs[id as usize];
    }
    if let Some(&v) = memo.get(&id) {
        return v;
    }
    let terms: Vec<f64> = g
        .connections
        .iter()
        .filter(|c| c.enabled && c.dst == id)
        .map(|c| c.weight as f64 * oracle_value(g, c.src, obs, memo))
        .collect();
    let n = g.nodes.iter().find(|n| n.id == id).expect("node exists");
    let agg = if terms.is_empty() {
        0.0
    } else {
        match n.aggregation {
            Aggregation::Sum => terms.iter().sum(),
            Aggregation::Product => terms.iter().product(),
            Aggregation::Max => terms.iter().cloned().fold(f64::MIN, f64::max),
            Aggregation::Min => terms.iter().cloned().fold(f64::MAX, f64::min),
            Aggregation::Mean => terms.iter().sum::<f64>() / terms.len() as f64,
        }
    };
    let z = n.bias as f64 + n.response as f64 * agg;
    let v = match n.activation {
        Activation::Identity => z,
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.max(0.0),
    };
    memo.insert(id, v);
    v
}

fn packed_inference() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let hw = HwConfig::default();
    let n = 10_000;
    let mut worst: f64 = 0.0;
    for case in 0..n {
        let g = random_genome(&mut rng);
        let obs: Vec<f64> = (0..g.num_inputs)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let got = infer(&g, &obs, &hw)
            .map_err(|e| format!("case {case}: {e}"))?
            .outputs;
        let mut memo = BTreeMap::new();
        let want: Vec<f64> = g
            .output_ids()
            .map(|id| oracle_value(&g, id, &obs, &mut memo))
            .collect();
        ensure(got.len() == want.len(), || {
            format!(
                "case {case}: {} outputs, expected {}",
                got.len(),
                want.len()
            )
        })?;
        for (a, b) in got.iter().zip(&want) {
            let scale = a.abs().max(b.abs());
            let rel = if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            };
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || {
                format!("case {case}: packed {a}, scalar {b}\n{g:?}")
            })?;
        }
    }
    Ok(format!("{n} cases, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 4. multicast read reduction

fn multicast_reduction() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    let parents: Vec<Genome> = (0..150u32)
        .map(|id| {
            let mut g = Genome::initial(id, 4, 2, Activation::Sigmoid);
            for c in &mut g.connections {
                c.weight = rng.gen_range(-1.0..1.0);
            }
            g
        })
        .collect();
    let shared = 17;
    let others: Vec<u32> = (0..150).filter(|&id| id != shared).collect();
    let matings: Vec<Mating> = (0..148u32)
        .map(|i| {
            let parent_b = others[rng.gen_range(0..others.len())];
            let parent_a = if i < 80 {
                shared
            } else {
                others[rng.gen_range(0..others.len())]
            };
            Mating {
                child_id: 150 + i,
                parent_a,
                parent_b,
            }
        })
        .collect();
    let plan = MatingPlan {
        matings,
        elites: vec![0, 1],
        survivors: Vec::new(),
    };
    ensure(plan.max_parent_reuse() == 80, || {
        format!("max parent reuse {}", plan.max_parent_reuse())
    })?;

    let hw = HwConfig::default();
    let schedule = allocate_pes(&plan, hw.num_eve_pes).map_err(|e| e.to_string())?;
    let (p2p, mcast) = parent_traffic(&schedule, &parents, shared).map_err(|e| e.to_string())?;
    let words = parents[shared as usize].gene_count() as u64;
    ensure(p2p == 80 * words && mcast == words, || {
        format!("p2p {p2p}, multicast {mcast}, {words} words")
    })?;
    ensure(p2p >= 10 * mcast, || {
        format!("ratio {}", p2p as f64 / mcast as f64)
    })?;

    let all_p2p =
        plan_fetch(&schedule, &parents, &[], &hw, NocMode::P2p).map_err(|e| e.to_string())?;
    let all_mcast =
        plan_fetch(&schedule, &parents, &[], &hw, NocMode::Multicast).map_err(|e| e.to_string())?;
    Ok(format!(
        "shared parent {p2p} vs {mcast} reads ({}x), whole generation {} vs {} ({:.1}x)",
        p2p / mcast,
        all_p2p.sram_reads,
        all_mcast.sram_reads,
        all_p2p.sram_reads as f64 / all_mcast.sram_reads as f64
    ))
}

// ---------------------------------------------------------------------------
// 5. PE sweep

fn pe_saturation() -> Check {
    let (_, mut config) = bundled().pop().expect("xor config");
    config.run.stop_on_target = false;
    config.run.max_generations = 20;
    config.run.seed = 5;
    // 512 only checks the flat tail
    let pes = ["16", "32", "64", "128", "256", "512"];
    let values: Vec<String> = pes.iter().map(|s| s.to_string()).collect();
    let points = run_sweep(&config, SweepAxis::PeCount, &values).map_err(|e| e.to_string())?;
    for p in &points[1..] {
        ensure(
            p.outcome.populations == points[0].outcome.populations,
            || format!("{} PEs changed the populations", p.value),
        )?;
    }
    let mut first = Vec::new();
    for g in 0..points[0].outcome.records.len() {
        let cycles: Vec<u64> = points
            .iter()
            .map(|p| p.outcome.records[g].eve_cycles)
            .collect();
        ensure(cycles[..5].windows(2).all(|w| w[0] > w[1]), || {
            format!("generation {g}: {cycles:?}")
        })?;
        ensure(cycles[4] == cycles[5], || {
            format!("generation {g}: not flat past 148 children {cycles:?}")
        })?;
        if g == 0 {
            first = cycles;
        }
    }
    Ok(format!(
        "generation 0 eve_cycles {:?} for PEs {:?}",
        first, pes
    ))
}

// ---------------------------------------------------------------------------
// 7. convergence

fn convergence() -> Check {
    let configs: BTreeMap<String, RunConfig> = bundled().into_iter().collect();
    let count = |name: &str, limit: u32| -> std::result::Result<(usize, Vec<String>), String> {
        let mut config = configs[name].clone();
        config.run.max_generations = limit;
        let mut solved = 0;
        let mut trace = Vec::new();
        for seed in 1..=20 {
            config.run.seed = seed;
            let outcome = run_evolve(&config).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            match outcome.summary.solved_generation {
                Some(g) => {
                    solved += 1;
                    trace.push(g.to_string());
                }
                None => trace.push(format!("-({:.3})", outcome.summary.best_fitness)),
            }
        }
        Ok((solved, trace))
    };
    let (xor, xor_trace) = count("xor", 300)?;
    let (cartpole, cart_trace) = count("cartpole", 500)?;
    let detail = format!(
        "xor {xor}/20 within 300 [{}], cartpole {cartpole}/20 within 500 [{}]",
        xor_trace.join(" "),
        cart_trace.join(" ")
    );
    if xor >= 16 && cartpole >= 10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 8. determinism

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (name, config) in bundled() {
        let mut bytes = Vec::new();
        for repeat in 0..2 {
            let mut c = config.clone();
            c.run.seed = 11;
            let out = dir.path().join(format!("{name}_{repeat}"));
            c.run.output_dir = Some(out.clone());
            run_evolve(&c).map_err(|e| format!("{name}: {e}"))?;
            bytes.push(std::fs::read(out.join("stats.csv")).map_err(|e| e.to_string())?);
        }
        ensure(!bytes[0].is_empty() && bytes[0] == bytes[1], || {
            format!("{name}: stats.csv differs between repeats")
        })?;
    }
    Ok("stats.csv byte-identical across repeats for every bundled config".into())
}

// ---------------------------------------------------------------------------
// 9. NoC neutrality

fn without_energy(records: &[GenRecord]) -> Vec<GenRecord> {
    records
        .iter()
        .map(|r| GenRecord {
            energy_total: 0.0,
            ..r.clone()
        })
        .collect()
}

fn noc_neutrality() -> Check {
    let values = ["p2p".to_string(), "multicast".to_string()];
    let mut saved = Vec::new();
    for (name, mut config) in bundled() {
        config.run.seed = 13;
        config.run.stop_on_target = false;
        config.run.max_generations = 25;
        let points =
            run_sweep(&config, SweepAxis::NocMode, &values).map_err(|e| format!("{name}: {e}"))?;
        let (p2p, mcast) = (&points[0].outcome, &points[1].outcome);
        ensure(p2p.populations == mcast.populations, || {
            format!("{name}: populations differ")
        })?;
        let a = stats_csv(&without_energy(&p2p.records)).map_err(|e| e.to_string())?;
        let b = stats_csv(&without_energy(&mcast.records)).map_err(|e| e.to_string())?;
        ensure(a == b, || {
            format!("{name}: columns other than energy differ")
        })?;
        for (ra, rb) in p2p.records.iter().zip(&mcast.records) {
            ensure(rb.sram_reads_mcast <= ra.sram_reads_p2p, || {
                format!("{name}: multicast reads exceed p2p")
            })?;
            ensure(rb.energy_total <= ra.energy_total, || {
                format!("{name}: multicast costs more energy")
            })?;
        }
        let e =
            |o: &evosim::harness::RunOutcome| o.records.iter().map(|r| r.energy_total).sum::<f64>();
        saved.push(format!("{name} {:.1}%", 100.0 * (1.0 - e(mcast) / e(p2p))));
    }
    Ok(format!(
        "identical traces and populations; multicast energy saving {}",
        saved.join(", ")
    ))
}

// ---------------------------------------------------------------------------

fn report(number: u32, title: &str, budget: Duration, elapsed: Duration, check: Check) -> bool {
    let in_time = elapsed < budget;
    let (ok, detail) = match check {
        Ok(d) => (in_time, d),
        Err(d) => (false, d),
    };
    println!(
        "criterion {number} {title}: {} ({detail}; {:.2} s of {} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut results = Vec::new();

    let (c, t) = timed(codec_round_trip);
    results.push(report(1, "codec soundness", secs(1), t, c));

    let ((equivalence, memory), t) = timed(compare_runs);
    results.push(report(
        2,
        "streaming/reference equivalence",
        secs(120),
        t,
        equivalence,
    ));

    let (c, t) = timed(packed_inference);
    results.push(report(3, "packed inference", secs(30), t, c));

    let (c, t) = timed(multicast_reduction);
    results.push(report(4, "multicast read reduction", secs(1), t, c));

    let (c, t) = timed(pe_saturation);
    results.push(report(5, "throughput saturation", secs(60), t, c));

    // measured on the runs of criterion 2
    results.push(report(
        6,
        "memory footprint",
        secs(120),
        Duration::ZERO,
        memory,
    ));

    let (c, t) = timed(convergence);
    results.push(report(7, "convergence", secs(600), t, c));

    let (c, t) = timed(determinism);
    results.push(report(8, "determinism", secs(60), t, c));

    let (c, t) = timed(noc_neutrality);
    results.push(report(9, "NoC neutrality", secs(60), t, c));

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
