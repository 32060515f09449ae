mod common;

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{random_3cnf, random_netlist, random_rel, random_subset, signals, truth_table_sat, Enumerator};
use upec_ssc::cnf::{ClauseSet, Lit};
use upec_ssc::config::ProofConfig;
use upec_ssc::encode::{decode_word, Encoder, FrameCtx};
use upec_ssc::eval::{evaluate_frame, Value};
use upec_ssc::miter::{build_query, extract_counterexample, UpecQuery};
use upec_ssc::netlist::Netlist;
use upec_ssc::procedure::{run_ssc, VerdictStatus};
use upec_ssc::sat::{solve, Status, DEFAULT_CONFLICT_BUDGET};
use upec_ssc::stateset::StateSet;

fn set(ids: &BTreeSet<u32>) -> StateSet {
    ids.iter().copied().collect()
}

#[test]
fn one_step_query_matches_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let (mut sat, mut unsat) = (0, 0);
    for case in 0..200 {
        let text = random_netlist(&mut rng, 12);
        let n = Netlist::parse(&text).unwrap_or_else(|e| panic!("case {case}: {e}\n{text}"));
        let s = random_subset(&mut rng, &signals(&n));
        let victim: Vec<_> = random_rel(&mut rng, &n).into_iter().filter(|_| rng.gen_bool(0.3)).collect();
        let inv: Vec<_> = random_rel(&mut rng, &n).into_iter().filter(|_| rng.gen_bool(0.3)).collect();

        let oracle = Enumerator::new(&n).diverging(&s, &victim, &inv);
        let mut q = UpecQuery::two_cycle(&n, set(&s));
        q.victim_constraints = victim.iter().map(|r| r.to_constraint(&n, true)).collect();
        q.invariants = inv.iter().map(|r| r.to_constraint(&n, false)).collect();
        let built = build_query(&q).unwrap();
        let r = solve(&built.clauses, &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        assert_eq!(r.status == Status::Sat, !oracle.is_empty(), "case {case}\n{text}\nS = {s:?}");
        if r.status == Status::Sat {
            sat += 1;
            let cex = extract_counterexample(&built, r.model.as_ref().unwrap()).unwrap();
            let diff: BTreeSet<u32> = cex.diff_set.iter().collect();
            assert!(diff.is_subset(&oracle), "case {case}: {diff:?} not within {oracle:?}");
        } else {
            unsat += 1;
        }
    }
    assert!(sat > 20 && unsat > 20, "unbalanced sample: {sat} sat, {unsat} unsat");
}

#[test]
fn fixpoint_verdict_matches_greatest_closed_set() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    for case in 0..60 {
        let text = random_netlist(&mut rng, 8);
        let n = Netlist::parse(&text).unwrap();
        let all = signals(&n);
        let s_sys = random_subset(&mut rng, &all);
        if s_sys.is_empty() {
            continue;
        }
        let pers: BTreeSet<u32> = s_sys.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        let mut cfg = ProofConfig::everything();
        let names = |ids: &BTreeSet<u32>| ids.iter().map(|&i| n.name_of(i).unwrap().to_string()).collect::<Vec<_>>();
        cfg.s_sys_patterns = names(&s_sys);
        cfg.persistent_patterns = names(&pers);
        cfg.transient_patterns = names(&s_sys.difference(&pers).copied().collect());
        let g = Enumerator::new(&n).greatest_closed(&s_sys, &[], &[]);
        let expected = if pers.is_subset(&g) {
            VerdictStatus::Secure
        } else {
            VerdictStatus::Vulnerable
        };
        let v = run_ssc(&n, &cfg).unwrap();
        assert_eq!(v.status, expected, "case {case}\n{text}");
        if expected == VerdictStatus::Secure {
            let fin: BTreeSet<u32> = v.final_set.unwrap().iter().collect();
            assert_eq!(fin, g, "case {case}");
        }
    }
}

#[test]
fn solver_matches_truth_table_on_random_3cnf() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let (mut sat, mut unsat) = (0, 0);
    for case in 0..200 {
        let vars = rng.gen_range(3..=20);
        let m = (vars as f64 * rng.gen_range(3.0..5.5)) as usize;
        let cnf = random_3cnf(&mut rng, vars, m);
        let mut cs = ClauseSet::new();
        for _ in 0..vars {
            cs.new_var();
        }
        for c in &cnf {
            cs.add_clause(c.iter().map(|&l| Lit::from_dimacs(l)).collect::<Vec<_>>());
        }
        let r = solve(&cs, &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        let expected = truth_table_sat(vars, &cnf);
        assert_eq!(r.status == Status::Sat, expected, "case {case}: {cnf:?}");
        if let Some(model) = r.model {
            assert!(cnf.iter().all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize] == (l > 0))));
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    assert!(sat > 20 && unsat > 20, "unbalanced sample: {sat} sat, {unsat} unsat");
}

#[test]
fn encoding_agrees_with_evaluator_on_random_dags() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for case in 0..200 {
        let text = random_dag(&mut rng);
        let n = Netlist::parse(&text).unwrap();
        let mut enc = Encoder::new();
        let ctx = FrameCtx { instance: 1, cycle: 0 };
        let frame = enc.encode_frame(&n, ctx, &Default::default(), &Default::default()).unwrap();
        let mut inputs = upec_ssc::eval::Valuation::new();
        for &i in n.inputs() {
            let v = rng.gen_range(0..256u64);
            inputs.insert(i, Value::Bv(v));
            let bits = frame.get(&n, i).bits().to_vec();
            for (b, lit) in bits.into_iter().enumerate() {
                enc.assert(if v >> b & 1 == 1 { lit } else { !lit });
            }
        }
        let cs = enc.into_clauses();
        let r = solve(&cs, &[], DEFAULT_CONFLICT_BUDGET).unwrap();
        let model = r.model.expect("inputs fix every node");
        let concrete = evaluate_frame(&n, &Default::default(), &inputs).unwrap();
        for node in n.nodes() {
            let got = decode_word(frame.get(&n, node.id), &model);
            assert_eq!(Some(&got), concrete.get(&n, node.id), "case {case}, node {}\n{text}", node.id);
        }
    }
}

fn random_dag(rng: &mut StdRng) -> String {
    let mut lines = vec!["1 sort bitvec 8".to_string(), "2 sort bitvec 1".to_string()];
    let mut bytes = vec![3u32, 4];
    lines.push("3 input 1 a".into());
    lines.push("4 input 1 b".into());
    let mut bits: Vec<u32> = Vec::new();
    let mut id = 4;
    for _ in 0..rng.gen_range(5..20) {
        id += 1;
        let a = bytes[rng.gen_range(0..bytes.len())];
        let b = bytes[rng.gen_range(0..bytes.len())];
        match rng.gen_range(0..12) {
            0 => {
                lines.push(format!("{id} not 1 {a}"));
                bytes.push(id);
            }
            k @ 1..=6 => {
                let op = ["and", "or", "xor", "add", "sub", "mul"][k - 1];
                lines.push(format!("{id} {op} 1 {a} {b}"));
                bytes.push(id);
            }
            k @ 7..=8 => {
                lines.push(format!("{id} {} 2 {a} {b}", if k == 7 { "eq" } else { "ult" }));
                bits.push(id);
            }
            9 if !bits.is_empty() => {
                let c = bits[rng.gen_range(0..bits.len())];
                lines.push(format!("{id} ite 1 {c} {a} {b}"));
                bytes.push(id);
            }
            10 => {
                let lo = rng.gen_range(0..8);
                lines.push(format!("{id} slice 2 {a} {lo} {lo}"));
                bits.push(id);
            }
            _ => {
                lines.push(format!("{id} const 1 {:x}", rng.gen_range(0..256)));
                bytes.push(id);
            }
        }
    }
    lines.join("\n") + "\n"
}

#[test]
fn enlarging_the_assumed_set_never_adds_models() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut checked = 0;
    for _ in 0..150 {
        let n = Netlist::parse(&random_netlist(&mut rng, 10)).unwrap();
        let all = signals(&n);
        let prove = random_subset(&mut rng, &all);
        let small = random_subset(&mut rng, &all);
        let big: BTreeSet<u32> = small.union(&random_subset(&mut rng, &all)).copied().collect();
        let status = |assumed: &BTreeSet<u32>| {
            let mut q = UpecQuery::two_cycle(&n, set(assumed));
            q.prove_schedule = vec![set(&prove)];
            let built = build_query(&q).unwrap();
            solve(&built.clauses, &[], DEFAULT_CONFLICT_BUDGET).unwrap().status
        };
        if status(&small) == Status::Unsat {
            checked += 1;
            assert_eq!(status(&big), Status::Unsat);
        }
        // shrinking the proved set of a holding check keeps it holding
        if status(&prove) == Status::Unsat {
            let sub = random_subset(&mut rng, &prove.iter().copied().collect::<Vec<_>>());
            let mut q = UpecQuery::two_cycle(&n, set(&prove));
            q.prove_schedule = vec![set(&sub)];
            let built = build_query(&q).unwrap();
            assert_eq!(solve(&built.clauses, &[], DEFAULT_CONFLICT_BUDGET).unwrap().status, Status::Unsat);
        }
    }
    assert!(checked > 10);
}

#[test]
fn dimacs_export_agrees_with_reference_solver() {
    use varisat::Solver;
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    for case in 0..100 {
        let n = Netlist::parse(&random_netlist(&mut rng, 10)).unwrap();
        let s = random_subset(&mut rng, &signals(&n));
        let q = UpecQuery::two_cycle(&n, set(&s));
        let built = build_query(&q).unwrap();
        let ours = solve(&built.clauses, &[], DEFAULT_CONFLICT_BUDGET).unwrap().status;
        let text = built.clauses.export_dimacs(&[]);
        let mut header = text.lines().filter(|l| l.starts_with("p cnf"));
        let p: Vec<usize> = header.next().unwrap()[6..].split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(p, vec![built.clauses.var_count() as usize, built.clauses.clauses().len()]);
        let mut solver = Solver::new();
        let formula = varisat::dimacs::DimacsParser::parse(text.as_bytes()).unwrap();
        solver.add_formula(&formula);
        let theirs = solver.solve().unwrap();
        assert_eq!(ours == Status::Sat, theirs, "case {case}");
        // a model of ours satisfies the exported clauses
        if let Some(model) = solve(&built.clauses, &[], DEFAULT_CONFLICT_BUDGET).unwrap().model {
            for c in formula.iter() {
                assert!(c.iter().any(|l| model[l.var().to_dimacs() as usize] == l.is_positive()));
            }
        }
    }
}
