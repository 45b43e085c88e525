//! Fault seeding: single-edit mutants of a model, and a campaign that runs
//! every repair analysis on the mutants that violate the property.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::io::format_rational;
use crate::model::{int, AutomatonId, CmpOp, LocationId, Network, Property, Rational};
use crate::repair::{apply_modification, run, Modification, RepairError, RepairOptions, RepairRun, Termination};
use crate::variation::VariationKind;
use crate::zone::{check, Verdict};

/// Largest constant of the model and its property.
pub fn max_bound(network: &Network, prop: &Property) -> Rational {
    network.max_constant().max(prop.max_constant())
}

/// `{-10, -1, +1, +ceil(0.1 M), +M}`.
pub fn bound_deltas(m: &Rational) -> [Rational; 5] {
    [int(-10), int(-1), int(1), (m / int(10)).ceil(), m.clone()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub kind: VariationKind,
    pub edit: Modification,
    pub network: Network,
}

impl Mutant {
    pub fn describe(&self, source: &Network) -> String {
        match &self.edit {
            Modification::Reset {
                clock, transitions, add, ..
            } => {
                let (a, t) = transitions[0];
                let aut = source.automaton(a);
                let tr = &aut.transitions[t];
                format!(
                    "{} reset of {} on {} -> {}",
                    if *add { "add" } else { "remove" },
                    source.clock_name(*clock),
                    source.location_name(a, tr.source),
                    source.location_name(a, tr.target)
                )
            }
            m => m.describe(source),
        }
    }
}

fn edits(network: &Network, m: &Rational, kind: VariationKind) -> Vec<Modification> {
    let mut out = Vec::new();
    match kind {
        VariationKind::Bound => {
            let deltas = bound_deltas(m);
            for (index, site) in network.constraint_sites().into_iter().enumerate() {
                let old = network.constraint(site).bound.clone();
                let mut seen = BTreeSet::new();
                for d in &deltas {
                    let new = (&old + d).max(int(0));
                    if new != old && seen.insert(new.clone()) {
                        out.push(Modification::Bound {
                            site,
                            index,
                            old: old.clone(),
                            new,
                        });
                    }
                }
            }
        }
        VariationKind::Operator => {
            for (index, site) in network.constraint_sites().into_iter().enumerate() {
                let old = network.constraint(site).op;
                for new in CmpOp::ALL.into_iter().filter(|o| *o != old) {
                    out.push(Modification::Operator { site, index, old, new });
                }
            }
        }
        VariationKind::ClockRef => {
            for (index, site) in network.constraint_sites().into_iter().enumerate() {
                let old = network.constraint(site).clock;
                for &new in network.automaton(site.automaton()).clocks.iter().filter(|c| **c != old) {
                    out.push(Modification::ClockRef { site, index, old, new });
                }
            }
        }
        VariationKind::Reset => {
            for (a, aut) in network.automata.iter().enumerate() {
                for (t, tr) in aut.transitions.iter().enumerate() {
                    for &clock in &aut.clocks {
                        out.push(Modification::Reset {
                            step: 0,
                            clock,
                            transitions: vec![(AutomatonId(a), t)],
                            add: !tr.resets.contains(&clock),
                        });
                    }
                }
            }
        }
        VariationKind::Urgency => {
            for (a, aut) in network.automata.iter().enumerate() {
                for (l, loc) in aut.locations.iter().enumerate() {
                    out.push(Modification::Urgency {
                        automaton: AutomatonId(a),
                        location: LocationId(l),
                        urgent: !loc.urgent,
                    });
                }
            }
        }
    }
    out
}

/// Single-edit mutants for the selected operators, in a fixed order:
/// operator kind, then constraint / transition / location order.
pub fn seed(network: &Network, prop: &Property, kinds: &[VariationKind]) -> Vec<Mutant> {
    let m = max_bound(network, prop);
    VariationKind::ALL
        .into_iter()
        .filter(|k| kinds.contains(k))
        .flat_map(|kind| {
            edits(network, &m, kind).into_iter().map(move |edit| Mutant {
                kind,
                network: apply_modification(network, &edit).expect("edit built from the network"),
                edit,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckResult {
    Safe,
    Violated {
        steps: usize,
    },
    /// The model checker ran out of states.
    Budget,
}

#[derive(Debug, Clone)]
pub struct MutantResult {
    pub mutant: Mutant,
    pub check: CheckResult,
    pub runs: Vec<(VariationKind, Result<RepairRun, RepairError>)>,
}

impl MutantResult {
    fn repairs(&self, kinds: &[VariationKind]) -> impl Iterator<Item = &RepairRun> + '_ {
        let kinds = kinds.to_vec();
        self.runs
            .iter()
            .filter(move |(k, _)| kinds.contains(k))
            .filter_map(|(_, r)| r.as_ref().ok())
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub scope: String,
    /// Seeded mutants.
    pub sd: usize,
    /// Mutants with a diagnostic trace.
    pub t: usize,
    /// Longest trace.
    pub ln: usize,
    pub r: usize,
    pub a: usize,
    /// Traces with at least one admissible repair.
    pub s: usize,
    /// Analyses or checks that hit a budget.
    pub o: usize,
    /// Largest constraint system: variables and atoms.
    pub vr: usize,
    pub cn: usize,
}

pub const CSV_HEADER: &str = "scope,Sd,T,Ln,R,A,S,O,Vr,Cn";

impl Row {
    fn compute(scope: String, results: &[&MutantResult], kinds: &[VariationKind]) -> Row {
        let mut row = Row {
            scope,
            sd: results.len(),
            t: 0,
            ln: 0,
            r: 0,
            a: 0,
            s: 0,
            o: 0,
            vr: 0,
            cn: 0,
        };
        for res in results {
            match res.check {
                CheckResult::Safe => continue,
                CheckResult::Budget => {
                    row.o += 1;
                    continue;
                }
                CheckResult::Violated { steps } => {
                    row.t += 1;
                    row.ln = row.ln.max(steps);
                }
            }
            let mut solved = false;
            for (k, r) in &res.runs {
                if !kinds.contains(k) {
                    continue;
                }
                match r {
                    Err(_) => row.o += 1,
                    Ok(run) => {
                        if run.termination == Termination::Budget || run.timeouts > 0 {
                            row.o += 1;
                        }
                        row.vr = row.vr.max(run.system_size.0);
                        row.cn = row.cn.max(run.system_size.1);
                    }
                }
            }
            for run in res.repairs(kinds) {
                row.r += run.outcomes.len();
                let adm = run.outcomes.iter().filter(|o| o.admissible).count();
                row.a += adm;
                solved |= adm > 0;
            }
            row.s += solved as usize;
        }
        row
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scope, self.sd, self.t, self.ln, self.r, self.a, self.s, self.o, self.vr, self.cn
        )
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOptions {
    pub repair: RepairOptions,
    pub repair_kinds: Vec<VariationKind>,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            repair: RepairOptions::default(),
            repair_kinds: VariationKind::ALL.to_vec(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedCampaign {
    pub source: Network,
    pub property: Property,
    pub seed_kinds: Vec<VariationKind>,
    pub repair_kinds: Vec<VariationKind>,
    pub m: Rational,
    pub results: Vec<MutantResult>,
}

fn analyse(mutant: Mutant, prop: &Property, opts: &CampaignOptions) -> MutantResult {
    let trace = match check(&mutant.network, prop, opts.repair.check) {
        Ok(Verdict::Safe) => {
            return MutantResult {
                mutant,
                check: CheckResult::Safe,
                runs: vec![],
            }
        }
        Ok(Verdict::Violated(t)) => t,
        Err(_) => {
            return MutantResult {
                mutant,
                check: CheckResult::Budget,
                runs: vec![],
            }
        }
    };
    let runs = VariationKind::ALL
        .into_iter()
        .filter(|k| opts.repair_kinds.contains(k))
        .map(|k| (k, run(&mutant.network, prop, k, Some(trace.clone()), opts.repair)))
        .collect();
    MutantResult {
        mutant,
        check: CheckResult::Violated { steps: trace.len() },
        runs,
    }
}

/// Seed, check each mutant and repair every violating one.
pub fn campaign(network: &Network, prop: &Property, seed_kinds: &[VariationKind], opts: &CampaignOptions) -> SeedCampaign {
    let mutants = seed(network, prop, seed_kinds);
    let slots: Vec<Mutex<Option<MutantResult>>> = mutants.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..opts.threads.max(1).min(mutants.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= mutants.len() {
                    break;
                }
                let r = analyse(mutants[i].clone(), prop, opts);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    SeedCampaign {
        source: network.clone(),
        property: prop.clone(),
        seed_kinds: VariationKind::ALL.into_iter().filter(|k| seed_kinds.contains(k)).collect(),
        repair_kinds: opts.repair_kinds.clone(),
        m: max_bound(network, prop),
        results: slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every mutant analysed"))
            .collect(),
    }
}

impl SeedCampaign {
    /// Rows per seeding operator, per repair kind, and the total.
    pub fn rows(&self) -> Vec<Row> {
        let all: Vec<&MutantResult> = self.results.iter().collect();
        let mut rows = Vec::new();
        for k in &self.seed_kinds {
            let part: Vec<&MutantResult> = all.iter().copied().filter(|r| r.mutant.kind == *k).collect();
            rows.push(Row::compute(format!("seed:{k}"), &part, &self.repair_kinds));
        }
        for k in &self.repair_kinds {
            rows.push(Row::compute(format!("repair:{k}"), &all, &[*k]));
        }
        rows.push(Row::compute("total".into(), &all, &self.repair_kinds));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in self.rows() {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let names = |ks: &[VariationKind]| ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
        let d = bound_deltas(&self.m);
        let _ = writeln!(out, "seed campaign");
        let _ = writeln!(out, "M = {}", format_rational(&self.m));
        let _ = writeln!(
            out,
            "bound deltas: -10, -1, +1, +ceil(0.1M) = +{}, +M = +{}; new bounds clamped at 0; identical and duplicate mutants dropped",
            format_rational(&d[3]),
            format_rational(&d[4])
        );
        let _ = writeln!(out, "seeding operators: {}", names(&self.seed_kinds));
        let _ = writeln!(out, "repair analyses: {}", names(&self.repair_kinds));
        let _ = writeln!(out, "mutants: {}", self.results.len());
        for (i, r) in self.results.iter().enumerate() {
            let status = match r.check {
                CheckResult::Safe => "safe".to_string(),
                CheckResult::Budget => "check budget exhausted".to_string(),
                CheckResult::Violated { steps } => format!("violated, trace of {steps} steps"),
            };
            let _ = writeln!(
                out,
                "#{:03} {}: {}: {}",
                i + 1,
                r.mutant.kind,
                r.mutant.describe(&self.source),
                status
            );
            for (k, run) in &r.runs {
                match run {
                    Ok(run) => {
                        let adm = run.outcomes.iter().filter(|o| o.admissible).count();
                        let _ = writeln!(
                            out,
                            "     {k}: {} repairs, {adm} admissible, {}",
                            run.outcomes.len(),
                            run.termination.name()
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(out, "     {k}: error: {e}");
                    }
                }
            }
        }
        let _ = writeln!(out);
        out.push_str(&self.to_csv());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_model;

    fn one_clock() -> (Network, Property) {
        parse_model(
            r#"{"channels":[],"automata":[{"name":"a","initial":"l0","clocks":["x"],
            "locations":[{"name":"l0","invariant":["x <= 2"]},{"name":"l1"}],
            "transitions":[{"source":"l0","target":"l1","guard":["x >= 1"],"resets":["x"]}]}],
            "property":"x <= 4 || !@a.l1"}"#,
        )
        .unwrap()
    }

    #[test]
    fn bound_mutants_clamp_and_deduplicate() {
        let (n, p) = one_clock();
        let ms = seed(&n, &p, &[VariationKind::Bound]);
        let first: Vec<Rational> = ms
            .iter()
            .filter_map(|m| match &m.edit {
                Modification::Bound { index: 0, new, .. } => Some(new.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(first, vec![int(0), int(1), int(3), int(6)]);
    }

    #[test]
    fn one_clock_has_no_clock_swaps() {
        let (n, p) = one_clock();
        assert!(seed(&n, &p, &[VariationKind::ClockRef]).is_empty());
        assert_eq!(seed(&n, &p, &[VariationKind::Operator]).len(), 8);
        assert_eq!(seed(&n, &p, &[VariationKind::Reset]).len(), 1);
        assert_eq!(seed(&n, &p, &[VariationKind::Urgency]).len(), 2);
    }

    #[test]
    fn no_repair_kinds_still_counts_seeds() {
        let (n, p) = one_clock();
        let opts = CampaignOptions {
            repair_kinds: vec![],
            ..Default::default()
        };
        let c = campaign(&n, &p, &[VariationKind::Bound], &opts);
        let total = c.rows().pop().unwrap();
        assert_eq!(total.sd, c.results.len());
        assert_eq!(total.r, 0);
        assert!(total.t > 0);
    }
}
