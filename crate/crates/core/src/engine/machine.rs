use std::rc::Rc;

use crate::store::{Constraint, ConstraintId, FunctorKey, Mark, Store};
use crate::term::{apply, rename_terms, unify, Substitution, Term, Var, VarSource};

use super::builtins::{first_solution, solve_builtin, solve_query};
use super::rule::{Goal, Program, RuleKind};
use super::{EngineError, FinalStore, Outcome, RunResult, Stats, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Failure,
}

#[derive(Debug, Clone)]
struct Cursor {
    id: ConstraintId,
    occurrence: usize,
    /// Head tuple of the last instance fired at `occurrence`.
    after: Option<Rc<[ConstraintId]>>,
}

#[derive(Debug, Clone)]
enum Task {
    Goal(Goal),
    Activate(ConstraintId),
    Resume(Cursor),
    /// Remaining solutions of a nondeterministic builtin.
    Alternatives(Rc<[Substitution]>),
}

struct Node {
    task: Task,
    next: Cont,
}

type Cont = Option<Rc<Node>>;

fn push(task: Task, next: Cont) -> Cont {
    Some(Rc::new(Node { task, next }))
}

struct ChoicePoint {
    mark: Mark,
    cont: Cont,
}

struct Instance {
    rule: usize,
    tuple: Vec<ConstraintId>,
    subst: Substitution,
    delta: Substitution,
}

/// One derivation over a program. Single-threaded; the program is shared.
pub struct Engine<'p> {
    program: &'p Program,
    store: Store,
    vars: VarSource,
    choices: Vec<ChoicePoint>,
    trace: Option<Vec<TraceEvent>>,
    stats: Stats,
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program) -> Self {
        let mut vars = VarSource::default();
        vars.reserve_above(program.max_serial().max(1 << 32));
        Engine {
            program,
            store: Store::new(),
            vars,
            choices: Vec::new(),
            trace: None,
            stats: Stats::default(),
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn program(&self) -> &Program {
        self.program
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn final_store(&self) -> FinalStore {
        FinalStore {
            constraints: self.store.snapshot(),
        }
    }

    fn emit(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(event());
        }
    }

    /// Inserts without activating. Variables of `t` are renamed apart from
    /// the program's.
    pub fn insert(&mut self, t: &Term) -> Result<ConstraintId, EngineError> {
        let (t, _) = rename_terms(std::slice::from_ref(t), &mut self.vars);
        self.insert_constraint(&t[0])
    }

    /// Activates an already stored constraint. Choice points made during the
    /// call are committed when it returns; on failure the store is restored.
    pub fn activate(&mut self, id: ConstraintId) -> Result<Status, EngineError> {
        self.run_isolated(push(Task::Activate(id), None))
    }

    /// Solves a goal in the current state, under the same commit rules as
    /// [`activate`](Self::activate).
    pub fn solve(&mut self, goal: Goal) -> Result<Status, EngineError> {
        self.run_isolated(push(Task::Goal(goal), None))
    }

    /// Inserts and activates each constraint in order. Choice points stay
    /// available for [`next_solution`](Self::next_solution).
    pub fn run(&mut self, initial: &[Term]) -> Result<Status, EngineError> {
        self.choices.clear();
        let (initial, _) = rename_terms(initial, &mut self.vars);
        let mut cont = None;
        for t in initial.iter().rev() {
            cont = push(Task::Goal(Goal::Call(t.clone())), cont);
        }
        self.execute(cont, 0)
    }

    /// Backtracks into the most recent choice point and continues.
    pub fn next_solution(&mut self) -> Result<Status, EngineError> {
        match self.backtrack(0) {
            Some(cont) => self.execute(cont, 0),
            None => Ok(Status::Failure),
        }
    }

    /// Re-activates every live constraint; returns how many rules fired.
    pub fn reactivate_all(&mut self) -> Result<u64, EngineError> {
        let before = self.stats.fired;
        let ids: Vec<ConstraintId> = self.store.live().map(|c| c.id).collect();
        for id in ids {
            if self.store.is_alive(id) && self.activate(id)? == Status::Failure {
                break;
            }
        }
        Ok(self.stats.fired - before)
    }

    fn run_isolated(&mut self, cont: Cont) -> Result<Status, EngineError> {
        let floor = self.choices.len();
        let mark = self.store.mark();
        let status = self.execute(cont, floor)?;
        self.choices.truncate(floor);
        if status == Status::Failure {
            self.store.undo_to(mark);
        }
        Ok(status)
    }

    fn backtrack(&mut self, floor: usize) -> Option<Cont> {
        if self.choices.len() <= floor {
            return None;
        }
        let cp = self.choices.pop()?;
        self.store.undo_to(cp.mark);
        self.stats.backtracks += 1;
        self.emit(|| TraceEvent::UndoTo(cp.mark.0));
        Some(cp.cont)
    }

    fn push_choice(&mut self, cont: Cont) {
        self.choices.push(ChoicePoint {
            mark: self.store.mark(),
            cont,
        });
        self.stats.choice_points += 1;
        self.emit(|| TraceEvent::Choice);
    }

    fn execute(&mut self, mut cont: Cont, floor: usize) -> Result<Status, EngineError> {
        loop {
            let Some(node) = cont else {
                return Ok(Status::Success);
            };
            let next = node.next.clone();
            match self.step(node.task.clone(), next)? {
                Some(c) => cont = c,
                None => match self.backtrack(floor) {
                    Some(c) => cont = c,
                    None => return Ok(Status::Failure),
                },
            }
        }
    }

    /// Runs one task; `None` means the branch failed.
    fn step(&mut self, task: Task, cont: Cont) -> Result<Option<Cont>, EngineError> {
        match task {
            Task::Goal(goal) => self.solve_goal(goal, cont),
            Task::Activate(id) => Ok(Some(push(
                Task::Resume(Cursor {
                    id,
                    occurrence: 0,
                    after: None,
                }),
                cont,
            ))),
            Task::Resume(cursor) => self.resume(cursor, cont),
            Task::Alternatives(sols) => {
                let (first, rest) = sols.split_first().expect("nonempty alternatives");
                if !rest.is_empty() {
                    self.push_choice(push(Task::Alternatives(rest.to_vec().into()), cont.clone()));
                }
                self.commit_bindings(first);
                Ok(Some(cont))
            }
        }
    }

    fn commit_bindings(&mut self, delta: &Substitution) {
        for (v, t) in delta.sorted() {
            self.store.bind(v, t);
        }
    }

    fn solve_goal(&mut self, goal: Goal, cont: Cont) -> Result<Option<Cont>, EngineError> {
        match goal {
            Goal::True => Ok(Some(cont)),
            Goal::Fail => Ok(None),
            Goal::And(a, b) => Ok(Some(push(Task::Goal(*a), push(Task::Goal(*b), cont)))),
            Goal::Or(a, b) => {
                self.push_choice(push(Task::Goal(*b), cont.clone()));
                Ok(Some(push(Task::Goal(*a), cont)))
            }
            Goal::IfThenElse(c, t, e) => {
                let cond = self.store.resolve(&c.to_term());
                match solve_query(&cond, &Substitution::new(), &self.store)? {
                    Some(delta) => {
                        self.commit_bindings(&delta);
                        Ok(Some(push(Task::Goal(*t), cont)))
                    }
                    None => Ok(Some(push(Task::Goal(*e), cont))),
                }
            }
            Goal::Builtin(t) => {
                let t = self.store.resolve(&t);
                let sols = solve_builtin(&t, &Substitution::new(), &self.store)?;
                if sols.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(push(Task::Alternatives(sols.into()), cont)))
                }
            }
            Goal::Call(t) => {
                let id = self.insert_constraint(&t)?;
                Ok(Some(push(Task::Activate(id), cont)))
            }
        }
    }

    fn insert_constraint(&mut self, t: &Term) -> Result<ConstraintId, EngineError> {
        let t = self.store.resolve(t);
        let (functor, args) = match t {
            Term::Const(f) => (f, Vec::new()),
            Term::Compound(f, args) => (f, args),
            other => return Err(EngineError::Type(format!("{other} is not a constraint"))),
        };
        let key = (functor.clone(), args.len());
        let id = if self.program.is_ground_required(&key) {
            self.store.insert_ground(functor, args)?
        } else {
            self.store.insert(functor, args)
        };
        self.stats.inserted += 1;
        if self.trace.is_some() {
            let c = self.store.get(id).expect("just inserted").to_term();
            self.emit(|| TraceEvent::Insert { id, constraint: c });
        }
        Ok(id)
    }

    fn resume(&mut self, cursor: Cursor, cont: Cont) -> Result<Option<Cont>, EngineError> {
        let Some(active) = self.store.get(cursor.id).filter(|c| c.alive) else {
            return Ok(Some(cont));
        };
        let key = (active.functor.clone(), active.args.len());
        let active_args = resolved_args(active, &self.store);
        let occurrences = self.program.occurrences(&key);
        for (occ, &(rule, pos)) in occurrences.iter().enumerate().skip(cursor.occurrence) {
            let after = if occ == cursor.occurrence {
                cursor.after.as_deref()
            } else {
                None
            };
            let found = find_instance(
                self.program,
                &self.store,
                &mut self.vars,
                rule,
                pos,
                cursor.id,
                &active_args,
                after,
            )?;
            if let Some(inst) = found {
                return Ok(Some(self.fire(inst, cursor.id, occ, pos, cont)?));
            }
        }
        Ok(Some(cont))
    }

    fn fire(
        &mut self,
        inst: Instance,
        active: ConstraintId,
        occurrence: usize,
        active_pos: usize,
        cont: Cont,
    ) -> Result<Cont, EngineError> {
        let rule = self.program.rule(inst.rule);
        let tuple: Rc<[ConstraintId]> = inst.tuple.clone().into();
        let resume = Task::Resume(Cursor {
            id: active,
            occurrence,
            after: Some(tuple.clone()),
        });
        if rule.backtrack_partners {
            self.push_choice(push(resume.clone(), cont.clone()));
        }
        self.stats.fired += 1;
        if self.trace.is_some() {
            let label = self.program.rule_label(inst.rule);
            let ids = inst.tuple.clone();
            self.emit(|| TraceEvent::Fire { rule: label, ids });
        }
        if rule.kind() == RuleKind::Propagation {
            self.store.history_record(inst.rule, inst.tuple.clone());
        }
        self.commit_bindings(&inst.delta);
        for (pos, &id) in inst.tuple.iter().enumerate() {
            if rule.is_removed(pos) {
                self.store.kill(id)?;
                self.stats.killed += 1;
                self.emit(|| TraceEvent::Kill(id));
            }
        }
        let mut next = cont;
        if !rule.is_removed(active_pos) {
            next = push(resume, next);
        }
        Ok(push(Task::Goal(rule.body.apply(&inst.subst)), next))
    }
}

fn resolved_args(c: &Constraint, store: &Store) -> Vec<Term> {
    if store.bindings().is_empty() {
        c.args.clone()
    } else {
        c.args.iter().map(|a| store.resolve(a)).collect()
    }
}

type Local = Vec<(u64, Term)>;

fn lookup_local<'a>(local: &'a Local, v: &Var) -> Option<&'a Term> {
    local.iter().rev().find(|(s, _)| *s == v.serial).map(|(_, t)| t)
}

/// One-way matching into a small undo-able binding list.
fn match_local(p: &Term, t: &Term, local: &mut Local) -> bool {
    match p {
        Term::Var(v) => match lookup_local(local, v) {
            Some(bound) => bound == t,
            None => {
                local.push((v.serial, t.clone()));
                true
            }
        },
        Term::Const(a) => matches!(t, Term::Const(b) if a == b),
        Term::Int(a) => matches!(t, Term::Int(b) if a == b),
        Term::Compound(f, ps) => match t {
            Term::Compound(g, ts) if f == g && ps.len() == ts.len() => {
                ps.iter().zip(ts).all(|(p, t)| match_local(p, t, local))
            }
            _ => false,
        },
    }
}

fn match_head(head: &Term, args: &[Term], local: &mut Local) -> bool {
    let mark = local.len();
    let ok = head.args().iter().zip(args).all(|(p, t)| match_local(p, t, local));
    if !ok {
        local.truncate(mark);
    }
    ok
}

struct Search<'a> {
    program: &'a Program,
    store: &'a Store,
    vars: &'a mut VarSource,
    rule: usize,
    partners: Vec<usize>,
    after: Option<&'a [ConstraintId]>,
    tuple: Vec<ConstraintId>,
    active: ConstraintId,
}

#[allow(clippy::too_many_arguments)]
fn find_instance(
    program: &Program,
    store: &Store,
    vars: &mut VarSource,
    rule: usize,
    pos: usize,
    active: ConstraintId,
    active_args: &[Term],
    after: Option<&[ConstraintId]>,
) -> Result<Option<Instance>, EngineError> {
    let r = program.rule(rule);
    let mut local = Local::new();
    if !match_head(r.head(pos), active_args, &mut local) {
        return Ok(None);
    }
    let mut tuple = vec![0; r.head_count()];
    tuple[pos] = active;
    let mut search = Search {
        program,
        store,
        vars,
        rule,
        partners: (0..r.head_count()).filter(|&p| p != pos).collect(),
        after,
        tuple,
        active,
    };
    search.level(0, after.is_some(), &mut local)
}

impl Search<'_> {
    fn level(&mut self, k: usize, prefix_eq: bool, local: &mut Local) -> Result<Option<Instance>, EngineError> {
        if k == self.partners.len() {
            if prefix_eq {
                // Same tuple as the one already fired.
                return Ok(None);
            }
            return self.leaf(local);
        }
        let pos = self.partners[k];
        let key: &FunctorKey = &self.program.head_keys(self.rule)[pos];
        let start = match (prefix_eq, self.after) {
            (true, Some(after)) => after[pos],
            _ => 0,
        };
        let store = self.store;
        let head = self.program.rule(self.rule).head(pos);
        for c in store.lookup_from(key, start) {
            if c.id == self.active || self.used(k, c.id) {
                continue;
            }
            let args = resolved_args(c, store);
            let mark = local.len();
            if !match_head(head, &args, local) {
                continue;
            }
            self.tuple[pos] = c.id;
            let eq = prefix_eq && c.id == start;
            let found = self.level(k + 1, eq, local)?;
            local.truncate(mark);
            if found.is_some() {
                return Ok(found);
            }
        }
        self.tuple[pos] = 0;
        Ok(None)
    }

    /// Whether `id` is already assigned to an earlier partner level.
    fn used(&self, k: usize, id: ConstraintId) -> bool {
        self.partners[..k].iter().any(|&p| self.tuple[p] == id)
    }

    fn leaf(&mut self, local: &Local) -> Result<Option<Instance>, EngineError> {
        let rule = self.program.rule(self.rule);
        if rule.kind() == RuleKind::Propagation && self.store.history_seen(self.rule, &self.tuple) {
            return Ok(None);
        }
        let mut subst = Substitution::new();
        for (serial, t) in local {
            subst.bind(Var::new("", *serial), t.clone());
        }
        let locals = self.program.locals(self.rule);
        let mut fresh = Vec::with_capacity(locals.len());
        for v in locals {
            let f = self.vars.fresh("_");
            fresh.push(f.serial);
            subst.bind(v.clone(), Term::Var(f));
        }
        let mut delta = Substitution::new();
        if !rule.guard_ask.is_empty() {
            let goals: Vec<Term> = rule
                .guard_ask
                .iter()
                .map(|g| self.store.resolve(&apply(g, &subst)))
                .collect();
            let mut only_locals = |d: &Substitution| d.iter().all(|(v, _)| fresh.contains(&v.serial));
            match first_solution(&goals, &Substitution::new(), self.store, &mut only_locals)? {
                Some(d) => delta = d,
                None => return Ok(None),
            }
        }
        for g in &rule.guard_tell {
            let l = self.store.resolve(&apply(&g.args()[0], &subst));
            let r = self.store.resolve(&apply(&g.args()[1], &subst));
            match unify(&l, &r, &delta) {
                Ok(d) => delta = d,
                Err(_) => return Ok(None),
            }
        }
        Ok(Some(Instance {
            rule: self.rule,
            tuple: self.tuple.clone(),
            subst,
            delta,
        }))
    }
}

/// Runs `initial` to a final store or failure.
pub fn run(program: &Program, initial: &[Term]) -> Result<RunResult, EngineError> {
    let mut engine = Engine::new(program);
    let status = engine.run(initial)?;
    let outcome = match status {
        Status::Success => Outcome::Success(engine.final_store()),
        Status::Failure => Outcome::Failure,
    };
    Ok(RunResult {
        outcome,
        stats: engine.stats(),
    })
}

/// Distinct final stores over all branches, in backtracking order, up to `limit`.
pub fn solutions(program: &Program, initial: &[Term], limit: usize) -> Result<Vec<FinalStore>, EngineError> {
    let mut engine = Engine::new(program);
    let mut out: Vec<FinalStore> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut status = engine.run(initial)?;
    while status == Status::Success && out.len() < limit {
        let fs = engine.final_store();
        if seen.insert(fs.dump()) {
            out.push(fs);
        }
        if out.len() >= limit {
            break;
        }
        status = engine.next_solution()?;
    }
    Ok(out)
}
