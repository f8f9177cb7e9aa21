//! Finite-stage priority construction of a simple, low set `A` of
//! positive integers, with full bookkeeping.
//!
//! Stage `s` (starting from `A_1` empty) works with two machine lists:
//! the eq-dialect machines `N_i` whose halting sets supply the
//! snapshots `W_{i,s}`, and the oracle machines `M_j` whose bounded
//! diagonal runs produce the query bounds
//! `a(j,s)` — the greatest integer used in an oracle query by
//! `M_j^{A_s}` on input `j` within `s` steps, or 0 when that run does
//! not halt within `s` steps. An index `i <= s` is a candidate when
//! `A_s` has not yet met `W_{i,s}` and some `x` in `W_{i,s}` passes
//! `phi(i,s,x) = 2i < x  and  a(j,s) < x for all j <= i`; the least
//! candidate adjoins its least admissible witness. Keeping witnesses
//! above every protected query bound is what preserves already-halting
//! diagonal computations, and `2i < x` keeps the complement infinite.
//!
//! Both lists are pluggable: the genuine code enumeration is the
//! default, synthetic lists drive the combinatorics in tests and the
//! `stages` CLI. The witness machine builders emit real programs whose
//! inner stage enumeration is reached through a reserved oracle hook
//! (`stage_hook_oracle` / `diag_hook_oracle`); a pure fallback freezes
//! a small stage horizon into an oracle-free program instead.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::encoding::machine_at_u64;
use crate::machine::{
    init_state, step, Dialect, DialectBase, Instruction, OracleSpec, Program, RegId, StepNote,
};
use crate::reals::RealValue;
use crate::simulation::Dovetailer;

/// Supplier of the monotone snapshots `W_{i,s}`.
pub trait WSource: Send {
    fn snapshot(&mut self, i: u64, s: u64) -> BTreeSet<u64>;
}

/// Supplier of the oracle machines `M_j`.
pub trait MachineList: Send {
    fn program(&self, j: u64) -> Program;
}

/// The genuine enumeration of eq-dialect machine codes, dovetailed
/// incrementally and cached per index.
pub struct GenuineWSource {
    dovetails: HashMap<u64, Dovetailer>,
}

impl GenuineWSource {
    pub fn new() -> Self {
        GenuineWSource { dovetails: HashMap::new() }
    }
}

impl Default for GenuineWSource {
    fn default() -> Self {
        Self::new()
    }
}

impl WSource for GenuineWSource {
    fn snapshot(&mut self, i: u64, s: u64) -> BTreeSet<u64> {
        let d = self.dovetails.entry(i).or_insert_with(|| {
            Dovetailer::new(machine_at_u64(i, Dialect::ADD_EQ))
                .expect("eq-dialect machines lack oracles")
        });
        d.advance_to_round(s);
        // The pair (n, t) is discovered in round max(n, t); the cache may
        // have advanced further than s for an earlier caller.
        d.emitted()
            .iter()
            .filter(|p| p.n.max(p.t) <= s)
            .map(|p| p.n)
            .collect()
    }
}

/// Emission schedule of one synthetic enumerator.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `(round, value)` pairs: the value is visible from that round on.
    Explicit { entries: Vec<(u64, u64)> },
    /// One new value `first + k*step` per round, starting at `from_round`.
    Arithmetic { first: u64, step: u64, from_round: u64 },
}

impl Schedule {
    fn members_at(&self, s: u64) -> BTreeSet<u64> {
        match self {
            Schedule::Explicit { entries } => entries
                .iter()
                .filter(|(round, _)| *round <= s)
                .map(|(_, v)| *v)
                .collect(),
            Schedule::Arithmetic { first, step, from_round } => {
                if s < *from_round {
                    return BTreeSet::new();
                }
                // Saturating keeps arbitrary fixtures panic-free.
                (0..=(s - from_round))
                    .map(|k| first.saturating_add(k.saturating_mul(*step)))
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FixtureEnumerator {
    pub i: u64,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FixtureMachine {
    pub j: u64,
    /// Assembly text of the injected oracle machine.
    pub text: String,
}

/// A synthetic stage harness: injected enumerators and, optionally,
/// injected oracle machines.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
pub struct SyntheticFixture {
    pub enumerators: Vec<FixtureEnumerator>,
    #[serde(default)]
    pub machines: Vec<FixtureMachine>,
}

pub struct SyntheticWSource {
    schedules: BTreeMap<u64, Schedule>,
}

impl SyntheticWSource {
    pub fn new(enumerators: impl IntoIterator<Item = FixtureEnumerator>) -> Self {
        SyntheticWSource {
            schedules: enumerators.into_iter().map(|e| (e.i, e.schedule)).collect(),
        }
    }
}

impl WSource for SyntheticWSource {
    fn snapshot(&mut self, i: u64, s: u64) -> BTreeSet<u64> {
        self.schedules
            .get(&i)
            .map(|sch| sch.members_at(s))
            .unwrap_or_default()
    }
}

/// The genuine enumeration of oracle-machine codes.
pub struct GenuineMachines;

impl MachineList for GenuineMachines {
    fn program(&self, j: u64) -> Program {
        machine_at_u64(j, Dialect::with_oracle(DialectBase::AddOrd))
    }
}

/// Genuine enumeration with injected overrides at chosen indices.
pub struct SyntheticMachines {
    overrides: BTreeMap<u64, Program>,
}

impl SyntheticMachines {
    pub fn new(overrides: impl IntoIterator<Item = (u64, Program)>) -> Self {
        SyntheticMachines { overrides: overrides.into_iter().collect() }
    }
}

impl MachineList for SyntheticMachines {
    fn program(&self, j: u64) -> Program {
        self.overrides
            .get(&j)
            .cloned()
            .unwrap_or_else(|| GenuineMachines.program(j))
    }
}

/// The table `j -> a(j,s)` for one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryBoundTable {
    pub s: u64,
    bounds: BTreeMap<u64, u64>,
}

impl QueryBoundTable {
    pub fn get(&self, j: u64) -> u64 {
        *self.bounds.get(&j).expect("query bound not computed for this index")
    }

    pub fn covered_up_to(&self) -> u64 {
        self.bounds.keys().next_back().copied().unwrap_or(0)
    }
}

fn integer_floor_at_zero(v: &RealValue) -> Option<u64> {
    use num_traits::{Signed, ToPrimitive};
    let n = v.as_integer()?;
    if n.is_negative() {
        Some(0)
    } else {
        n.to_u64()
    }
}

/// Halt step and output of a bounded run, when it halts in time.
type BoundedHalt = Option<(u64, Vec<RealValue>)>;

/// Runs a program collecting every oracle query tuple; returns the halt
/// step (if any within the budget) and the queries issued so far.
fn run_collecting_queries(
    program: &Program,
    input: &[RealValue],
    oracle: &OracleSpec,
    budget: u64,
) -> (BoundedHalt, Vec<Vec<RealValue>>) {
    let mut state = init_state(program, input).expect("nonempty input");
    let mut queries = Vec::new();
    for _ in 0..budget {
        match step(&mut state, program, Some(oracle)).expect("oracle attached") {
            StepNote::OracleQueried { tuple, .. } => queries.push(tuple),
            StepNote::Halted { output } => return (Some((state.steps(), output)), queries),
            _ => {}
        }
    }
    (None, queries)
}

/// `a(j, s)` against an explicit finite oracle set: the greatest
/// integer appearing in any query tuple of the s-step run of
/// `M_j^{A_s}` on input `j`, when that run halts within `s` steps;
/// 0 otherwise (and 0 when no query carries an integer).
pub fn query_bound(j: u64, s: u64, a_s: &BTreeSet<u64>, machines: &dyn MachineList) -> u64 {
    debug_assert!(j >= 1 && j <= s);
    let program = machines.program(j);
    let oracle = OracleSpec::finite_integer_set("stage-set", a_s.clone());
    let input = [RealValue::from_integer(j as i64)];
    let (halted, queries) = run_collecting_queries(&program, &input, &oracle, s);
    if halted.is_none() {
        return 0;
    }
    queries
        .iter()
        .flat_map(|tuple| tuple.iter())
        .filter_map(integer_floor_at_zero)
        .max()
        .unwrap_or(0)
}

/// `phi(i, s, x) = 2i < x  and  a(j,s) < x for all j <= i`.
pub fn phi(i: u64, s: u64, x: u64, bounds: &QueryBoundTable) -> bool {
    debug_assert!(i <= s && bounds.s == s);
    2 * i < x && (1..=i).all(|j| bounds.get(j) < x)
}

/// One adjoined witness: stage, active index, value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ActiveEntry {
    pub stage: u64,
    pub index: u64,
    pub value: u64,
}

/// The construction state at the start of stage `s` (`a` is `A_s`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub s: u64,
    pub a: BTreeSet<u64>,
    pub active_history: Vec<ActiveEntry>,
    /// Indices whose `W_i` the set has already met.
    pub satisfied: BTreeSet<u64>,
}

/// Per-stage log line; field names match the JSON surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageSummary {
    pub s: u64,
    #[serde(rename = "I_s")]
    pub candidates: Vec<u64>,
    #[serde(rename = "i_s")]
    pub active_index: Option<u64>,
    #[serde(rename = "x")]
    pub adjoined: Option<u64>,
    #[serde(rename = "A_size")]
    pub a_size: u64,
}

/// Drives the stage evolution and answers bounded queries about it.
pub struct StageEngine {
    w: Box<dyn WSource>,
    machines: Box<dyn MachineList>,
    record: StageRecord,
    history: Vec<StageSummary>,
}

impl StageEngine {
    pub fn new(w: Box<dyn WSource>, machines: Box<dyn MachineList>) -> Self {
        StageEngine {
            w,
            machines,
            record: StageRecord {
                s: 1,
                a: BTreeSet::new(),
                active_history: Vec::new(),
                satisfied: BTreeSet::new(),
            },
            history: Vec::new(),
        }
    }

    /// Genuine code enumerations on both sides.
    pub fn genuine() -> Self {
        StageEngine::new(Box::new(GenuineWSource::new()), Box::new(GenuineMachines))
    }

    pub fn from_fixture(fixture: &SyntheticFixture) -> Result<Self, crate::machine::ParseError> {
        let mut overrides = Vec::new();
        for m in &fixture.machines {
            overrides.push((m.j, crate::machine::parse_program(&m.text)?));
        }
        Ok(StageEngine::new(
            Box::new(SyntheticWSource::new(fixture.enumerators.clone())),
            Box::new(SyntheticMachines::new(overrides)),
        ))
    }

    /// The stage the construction currently stands at; `record().a` is
    /// `A_s` for this `s`.
    pub fn stage(&self) -> u64 {
        self.record.s
    }

    pub fn record(&self) -> &StageRecord {
        &self.record
    }

    pub fn history(&self) -> &[StageSummary] {
        &self.history
    }

    /// Query bounds `a(j, s)` for the current stage, `j <= up_to`.
    pub fn query_bounds(&mut self, up_to: u64) -> QueryBoundTable {
        let s = self.record.s;
        let mut bounds = BTreeMap::new();
        for j in 1..=up_to.min(s) {
            bounds.insert(j, query_bound(j, s, &self.record.a, self.machines.as_ref()));
        }
        QueryBoundTable { s, bounds }
    }

    /// Executes the current stage and moves to the next one.
    pub fn stage_step(&mut self) -> &StageSummary {
        let s = self.record.s;
        // Materialize the nonempty snapshots for this stage.
        let mut snaps: Vec<(u64, BTreeSet<u64>)> = Vec::new();
        for i in 1..=s {
            let w = self.w.snapshot(i, s);
            if !w.is_empty() {
                snaps.push((i, w));
            }
        }
        let max_candidate = snaps
            .iter()
            .filter(|(_, w)| self.record.a.is_disjoint(w))
            .map(|(i, _)| *i)
            .max()
            .unwrap_or(0);
        let bounds = self.query_bounds(max_candidate);
        let mut candidates = Vec::new();
        for (i, w) in &snaps {
            if !self.record.a.is_disjoint(w) {
                continue;
            }
            if w.iter().any(|&x| phi(*i, s, x, &bounds)) {
                candidates.push(*i);
            }
        }
        let mut active_index = None;
        let mut adjoined = None;
        if let Some(&i_s) = candidates.first() {
            let w = snaps.iter().find(|(i, _)| *i == i_s).map(|(_, w)| w).unwrap();
            let x = *w
                .iter()
                .find(|&&x| phi(i_s, s, x, &bounds))
                .expect("candidate index has an admissible witness");
            assert!(
                !self.record.active_history.iter().any(|e| e.index == i_s),
                "active indices must not repeat"
            );
            self.record.a.insert(x);
            self.record.active_history.push(ActiveEntry { stage: s, index: i_s, value: x });
            active_index = Some(i_s);
            adjoined = Some(x);
        }
        for (i, w) in &snaps {
            if !self.record.a.is_disjoint(w) {
                self.record.satisfied.insert(*i);
            }
        }
        self.history.push(StageSummary {
            s,
            candidates,
            active_index,
            adjoined,
            a_size: self.record.a.len() as u64,
        });
        self.record.s = s + 1;
        self.history.last().unwrap()
    }

    /// Runs forward so that the record stands at stage `s`.
    pub fn run_to_stage(&mut self, s: u64) {
        while self.record.s < s {
            self.stage_step();
        }
    }

    /// `A_s` for any stage up to the requested one (extends the run).
    pub fn a_at_stage(&mut self, s: u64) -> BTreeSet<u64> {
        assert!(s >= 1);
        self.run_to_stage(s);
        self.record
            .active_history
            .iter()
            .filter(|e| e.stage < s)
            .map(|e| e.value)
            .collect()
    }

    /// Bounded diagonal run `M_k^{A_j}(k)` for `j` steps: halt step and
    /// output when it halts within the bound.
    pub fn machine_outcome(&mut self, k: u64, j: u64) -> BoundedHalt {
        let a_j = self.a_at_stage(j);
        let program = self.machines.program(k);
        let oracle = OracleSpec::finite_integer_set("stage-set", a_j);
        let input = [RealValue::from_integer(k as i64)];
        let (halted, _) = run_collecting_queries(&program, &input, &oracle, j);
        halted
    }
}

/// Runs the construction from `A_1` empty up to stage `final_stage`.
pub fn run_stages(
    final_stage: u64,
    w: Box<dyn WSource>,
    machines: Box<dyn MachineList>,
) -> (StageRecord, Vec<StageSummary>) {
    assert!(final_stage >= 1);
    let mut engine = StageEngine::new(w, machines);
    engine.run_to_stage(final_stage);
    (engine.record.clone(), engine.history)
}

/// Sparsity check: `|A intersect {0..2i}| < i` for every `i >= 1`.
pub fn sparsity_holds(a: &BTreeSet<u64>) -> bool {
    let max = a.iter().next_back().copied().unwrap_or(0);
    // Beyond i = max the intersection count is constant while i grows.
    for i in 1..=max.max(1) {
        let count = a.iter().filter(|&&x| x <= 2 * i).count() as u64;
        if count >= i {
            return false;
        }
    }
    true
}

/// Finite-horizon lowness coherence for index `n`: once the bounded
/// diagonal run `M_n^{A_t}(n)` halts within `t` steps at some stage `t`
/// past the last stage with active index `<= n`, every later computed
/// stage must reproduce the same halt step and output.
pub fn lowness_coherent(engine: &mut StageEngine, n: u64, horizon: u64) -> bool {
    engine.run_to_stage(horizon);
    let t_star = engine
        .record()
        .active_history
        .iter()
        .filter(|e| e.index <= n)
        .map(|e| e.stage)
        .max()
        .unwrap_or(0);
    let mut first: Option<(u64, Vec<RealValue>)> = None;
    for t in (t_star + 1)..=horizon {
        match (engine.machine_outcome(n, t), &first) {
            (Some(outcome), None) => first = Some(outcome),
            (Some(outcome), Some(seen)) => {
                if outcome != *seen {
                    return false;
                }
            }
            (None, Some(_)) => return false,
            (None, None) => {}
        }
    }
    true
}

/// Oracle hook behind the witness machines: `(q, s)` is in the oracle
/// iff `q` belongs to `A_s`, for stages up to the cap.
pub fn stage_hook_oracle(engine: Arc<Mutex<StageEngine>>, max_stage: u64) -> OracleSpec {
    OracleSpec::new("stage-hook", move |tuple: &[RealValue]| {
        if tuple.len() != 2 {
            return false;
        }
        let (Some(q), Some(s)) = (tuple[0].as_u64(), tuple[1].as_u64()) else {
            return false;
        };
        if s < 1 || s > max_stage || q < 1 {
            return false;
        }
        engine.lock().unwrap().a_at_stage(s).contains(&q)
    })
}

/// Oracle hook for the bounded diagonal family: `(k, j)` is in the
/// oracle iff `M_k^{A_j}(k)` halts within `j` steps, for `j` up to the
/// cap.
pub fn diag_hook_oracle(engine: Arc<Mutex<StageEngine>>, max_stage: u64) -> OracleSpec {
    OracleSpec::new("diag-hook", move |tuple: &[RealValue]| {
        if tuple.len() != 2 {
            return false;
        }
        let (Some(k), Some(j)) = (tuple[0].as_u64(), tuple[1].as_u64()) else {
            return false;
        };
        if k < 1 || j < 1 || j > max_stage {
            return false;
        }
        engine.lock().unwrap().machine_outcome(k, j).is_some()
    })
}

/// Emits `set dst = 1` followed by double/add steps building `value`.
fn emit_build_const(instrs: &mut Vec<Instruction>, dst: RegId, one: RegId, value: u64) {
    debug_assert!(value >= 1);
    instrs.push(Instruction::SetConst { dst, value: RealValue::one() });
    let len = 64 - value.leading_zeros() as usize;
    for pos in (0..len - 1).rev() {
        instrs.push(Instruction::AddReg { dst, lhs: dst, rhs: dst });
        if (value >> pos) & 1 == 1 {
            instrs.push(Instruction::AddReg { dst, lhs: dst, rhs: one });
        }
    }
}

/// Shared skeleton of the witness machines: build `(Z1, Z2) = (fixed,
/// counter)`, then query the hook with the pair, bumping the counter
/// until the answer is "in".
fn build_search_program(fixed: u64, counter_start: u64) -> Program {
    let mut instrs = Vec::new();
    instrs.push(Instruction::SetConst { dst: 3, value: RealValue::one() });
    emit_build_const(&mut instrs, 1, 3, fixed);
    emit_build_const(&mut instrs, 2, 3, counter_start);
    instrs.push(Instruction::IndexSet { idx: 1 });
    instrs.push(Instruction::IndexInc { idx: 1 });
    let loop_label = instrs.len() as u32 + 1;
    let halt_label = loop_label + 3;
    instrs.push(Instruction::OracleTest { if_member: halt_label, otherwise: loop_label + 1 });
    instrs.push(Instruction::AddReg { dst: 2, lhs: 2, rhs: 3 });
    // Z4 is never written, so this equality test is an unconditional jump.
    instrs.push(Instruction::EqTest { reg: 4, if_zero: loop_label, otherwise: loop_label });
    instrs.push(Instruction::Halt);
    Program::new(instrs).expect("witness skeleton is structurally valid")
}

/// The witness machine for membership of `x`: paired with
/// [`stage_hook_oracle`], it halts iff `x` enters the constructed set
/// within the hook's stage cap. Ignores its input.
pub fn build_lx(x: u64) -> Program {
    assert!(x >= 1);
    build_search_program(x, 1)
}

/// The witness machine for eventual diagonal halting: paired with
/// [`diag_hook_oracle`], it halts iff `M_k^{A_j}(k)` halts within `j`
/// steps for some `j > i` below the hook's cap. Ignores its input.
pub fn build_lik(i: u64, k: u64) -> Program {
    assert!(i >= 1 && k >= 1);
    build_search_program(k, i + 1)
}

/// Oracle-free fallback with the horizon frozen at build time: halts
/// immediately iff `x` is in `A` at the given stage, otherwise loops.
pub fn build_lx_pure(engine: &mut StageEngine, x: u64, stage_budget: u64) -> Program {
    let member = engine.a_at_stage(stage_budget).contains(&x);
    if member {
        Program::trivial()
    } else {
        Program::new(vec![
            Instruction::EqTest { reg: 4, if_zero: 1, otherwise: 1 },
            Instruction::Halt,
        ])
        .expect("loop skeleton is structurally valid")
    }
}
