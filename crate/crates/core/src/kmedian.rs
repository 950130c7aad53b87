//! Capacitated k-median with two client-facility distances `a ≤ b`.
//!
//! For `0 < a` and `b ≤ 3a` the facility set is chosen by the cardinality
//! forbidden-set DP on `f(F′)` = clients servable at distance `a`. For `a = 0`
//! or `b > 3a` the near graph splits into complete bipartite clusters and a
//! knapsack over clusters is exact.

use std::collections::HashMap;
use std::sync::Mutex;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{PcsmError, Result};
use crate::forbidden_dp::{cardinality_solve, ForbiddenOptions};
use crate::instance::IntInstance;
use crate::json::Num;
use crate::oracle::SetFunction;
use crate::rational::Rational;
use crate::subset::Subset;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoDistInstance {
    /// Capacity of each facility.
    pub caps: Vec<u64>,
    pub clients: usize,
    /// `near[j][i]` iff client `j` is at distance `a` from facility `i`.
    pub near: Vec<Vec<bool>>,
    pub a: Rational,
    pub b: Rational,
    /// At most this many facilities may open.
    pub k: usize,
}

impl TwoDistInstance {
    pub fn new(caps: Vec<u64>, clients: usize, pairs: &[(usize, usize)], a: Rational, b: Rational, k: usize) -> Result<Self> {
        if caps.contains(&0) {
            return Err(PcsmError::InvalidInstance("facility capacities must be positive".into()));
        }
        if a < Rational::zero() || a > b {
            return Err(PcsmError::InvalidInstance(format!("distances must satisfy 0 <= a <= b, got a={a} b={b}")));
        }
        let mut near = vec![vec![false; caps.len()]; clients];
        for &(j, i) in pairs {
            if j >= clients || i >= caps.len() {
                return Err(PcsmError::InvalidInstance(format!("pair ({j}, {i}) out of range")));
            }
            near[j][i] = true;
        }
        Ok(TwoDistInstance { caps, clients, near, a, b, k })
    }

    pub fn facilities(&self) -> usize {
        self.caps.len()
    }

    pub fn distance(&self, client: usize, facility: usize) -> Rational {
        if self.near[client][facility] {
            self.a
        } else {
            self.b
        }
    }

    /// `b·|C| − (b − a)·matched`.
    pub fn cost_of(&self, matched: usize) -> Rational {
        self.b * Rational::from_integer(self.clients as i128) - (self.b - self.a) * Rational::from_integer(matched as i128)
    }

    /// Whether the `k` largest capacities can host every client.
    pub fn is_feasible(&self) -> bool {
        let mut caps = self.caps.clone();
        caps.sort_unstable_by(|x, y| y.cmp(x));
        caps.iter().take(self.k).sum::<u64>() >= self.clients as u64
    }
}

/// Dinic max-flow with integer capacities.
struct Flow {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
}

impl Flow {
    fn new(nodes: usize) -> Self {
        Flow { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn edge(&mut self, u: usize, v: usize, c: u64) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.head.len()];
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn push(&mut self, u: usize, t: usize, limit: u64, level: &[usize], it: &mut [usize]) -> u64 {
        if u == t {
            return limit;
        }
        while it[u] < self.head[u].len() {
            let e = self.head[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.push(v, t, limit.min(self.cap[e]), level, it);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        let mut total = 0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let got = self.push(s, t, u64::MAX, &level, &mut it);
                if got == 0 {
                    break;
                }
                total += got;
            }
        }
    }
}

/// Maximum near assignment into `open`, as `(matched, facility per client)`.
fn near_matching(inst: &TwoDistInstance, open: &Subset) -> (usize, Vec<Option<usize>>) {
    let n_c = inst.clients;
    let fac: Vec<usize> = open.iter().collect();
    let (s, t) = (n_c + fac.len(), n_c + fac.len() + 1);
    let mut g = Flow::new(n_c + fac.len() + 2);
    for j in 0..n_c {
        g.edge(s, j, 1);
    }
    let mut links = Vec::new();
    for j in 0..n_c {
        for (k, &i) in fac.iter().enumerate() {
            if inst.near[j][i] {
                links.push((g.edge(j, n_c + k, 1), j, i));
            }
        }
    }
    for (k, &i) in fac.iter().enumerate() {
        g.edge(n_c + k, t, inst.caps[i]);
    }
    let matched = g.max_flow(s, t) as usize;
    let mut assign = vec![None; n_c];
    for (e, j, i) in links {
        if g.cap[e] == 0 {
            assign[j] = Some(i);
        }
    }
    (matched, assign)
}

/// Clients that can be served at distance `a` by `open`, respecting
/// capacities.
pub fn match_value(inst: &TwoDistInstance, open: &Subset) -> Result<usize> {
    if let Some(bad) = open.iter().find(|&i| i >= inst.facilities()) {
        return Err(PcsmError::ElementOutOfRange { element: bad, n: inst.facilities() });
    }
    Ok(near_matching(inst, open).0)
}

/// [`match_value`] as a set function over facilities, memoized per set.
pub struct MatchOracle<'a> {
    inst: &'a TwoDistInstance,
    memo: Mutex<HashMap<Subset, usize>>,
}

impl<'a> MatchOracle<'a> {
    pub fn new(inst: &'a TwoDistInstance) -> Self {
        MatchOracle { inst, memo: Mutex::new(HashMap::new()) }
    }
}

impl SetFunction for MatchOracle<'_> {
    fn ground_size(&self) -> usize {
        self.inst.facilities()
    }

    fn value(&self, set: &Subset) -> Rational {
        if let Some(&v) = self.memo.lock().expect("memo lock").get(set) {
            return Rational::from_integer(v as i128);
        }
        let v = near_matching(self.inst, set).0;
        self.memo.lock().expect("memo lock").insert(set.clone(), v);
        Rational::from_integer(v as i128)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KmMethod {
    /// `a = b`: any facilities with enough capacity are optimal.
    Uniform,
    /// Knapsack over near-graph clusters.
    Clusters,
    /// Cardinality DP on the matching objective.
    Reduction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KmSolution {
    pub open: Subset,
    /// Facility serving each client.
    pub assignment: Vec<usize>,
    /// Clients served at distance `a`.
    pub matched: usize,
    pub cost: Rational,
    pub method: KmMethod,
}

pub fn solve_two_distance(inst: &TwoDistInstance) -> Result<KmSolution> {
    if !inst.is_feasible() {
        return Err(PcsmError::Infeasible(format!(
            "the {} largest capacities cannot host {} clients",
            inst.k, inst.clients
        )));
    }
    let (open, method) = if inst.a == inst.b {
        (largest_caps(inst), KmMethod::Uniform)
    } else if inst.a.is_zero() || inst.b > inst.a * Rational::from_integer(3) {
        match clusters(inst) {
            Some(cl) => (cluster_dp(inst, &cl)?, KmMethod::Clusters),
            None => (reduction(inst)?, KmMethod::Reduction),
        }
    } else {
        (reduction(inst)?, KmMethod::Reduction)
    };
    extend(inst, open, method)
}

fn largest_caps(inst: &TwoDistInstance) -> Subset {
    let mut order: Vec<usize> = (0..inst.facilities()).collect();
    order.sort_by(|&x, &y| inst.caps[y].cmp(&inst.caps[x]).then(x.cmp(&y)));
    order.into_iter().take(inst.k).collect()
}

fn reduction(inst: &TwoDistInstance) -> Result<Subset> {
    let nf = inst.facilities();
    let reduced = IntInstance::new(
        vec![vec![1; nf]],
        vec![inst.caps.clone()],
        vec![inst.k.min(nf) as u64],
        vec![inst.clients as u64],
        MatchOracle::new(inst),
    )?;
    let out = cardinality_solve(&reduced, &ForbiddenOptions::default())?;
    out.best
        .map(|(_, s)| s)
        .ok_or_else(|| PcsmError::Infeasible("no facility set meets the capacity demand".into()))
}

/// A cluster: facilities and the number of clients, all mutually near.
struct Cluster {
    facilities: Vec<usize>,
    clients: usize,
}

/// Splits the near graph into complete bipartite components, or `None` if
/// some component is not complete.
fn clusters(inst: &TwoDistInstance) -> Option<Vec<Cluster>> {
    let nf = inst.facilities();
    let mut comp = vec![usize::MAX; nf];
    let mut out: Vec<Cluster> = Vec::new();
    let mut lonely = 0;
    for j in 0..inst.clients {
        let fs: Vec<usize> = (0..nf).filter(|&i| inst.near[j][i]).collect();
        let Some(&first) = fs.first() else {
            lonely += 1;
            continue;
        };
        if comp[first] == usize::MAX {
            if fs.iter().any(|&i| comp[i] != usize::MAX) {
                return None;
            }
            for &i in &fs {
                comp[i] = out.len();
            }
            out.push(Cluster { facilities: fs, clients: 1 });
        } else {
            let c = comp[first];
            if out[c].facilities != fs {
                return None;
            }
            out[c].clients += 1;
        }
    }
    for i in 0..nf {
        if comp[i] == usize::MAX {
            out.push(Cluster { facilities: vec![i], clients: 0 });
        }
    }
    out.push(Cluster { facilities: Vec::new(), clients: lonely });
    Some(out)
}

/// Knapsack over clusters: state `(opened, capacity clamped at |C|)`, value
/// = clients served near. Inside a cluster the `t` largest capacities
/// dominate every other `t` facilities.
fn cluster_dp(inst: &TwoDistInstance, cl: &[Cluster]) -> Result<Subset> {
    let need = inst.clients as u64;
    let k = inst.k.min(inst.facilities());
    let width = need as usize + 1;
    type Cell = Option<(usize, Vec<(usize, usize)>)>;
    let mut dp: Vec<Cell> = vec![None; (k + 1) * width];
    dp[0] = Some((0, Vec::new()));
    for (ci, c) in cl.iter().enumerate() {
        let mut fac = c.facilities.clone();
        fac.sort_by(|&x, &y| inst.caps[y].cmp(&inst.caps[x]).then(x.cmp(&y)));
        let prefix: Vec<u64> = std::iter::once(0)
            .chain(fac.iter().scan(0u64, |s, &i| {
                *s += inst.caps[i];
                Some(*s)
            }))
            .collect();
        let mut next = dp.clone();
        for used in 0..=k {
            for cap in 0..width {
                let Some((val, picks)) = &dp[used * width + cap] else { continue };
                for t in 1..=fac.len().min(k - used) {
                    let nu = used + t;
                    let ncap = (cap as u64 + prefix[t]).min(need) as usize;
                    let nval = val + (prefix[t].min(c.clients as u64) as usize);
                    let slot = &mut next[nu * width + ncap];
                    if slot.as_ref().is_none_or(|(v, _)| nval > *v) {
                        let mut p = picks.clone();
                        p.push((ci, t));
                        *slot = Some((nval, p));
                    }
                }
            }
        }
        dp = next;
    }
    let best = (0..=k)
        .filter_map(|u| dp[u * width + need as usize].as_ref())
        .max_by(|x, y| x.0.cmp(&y.0).then(y.1.len().cmp(&x.1.len())))
        .ok_or_else(|| PcsmError::Infeasible("no facility set meets the capacity demand".into()))?;
    let mut open = Subset::empty();
    for &(ci, t) in &best.1 {
        let mut fac = cl[ci].facilities.clone();
        fac.sort_by(|&x, &y| inst.caps[y].cmp(&inst.caps[x]).then(x.cmp(&y)));
        for &i in &fac[..t] {
            open.insert(i);
        }
    }
    Ok(open)
}

/// Maximum near assignment, then leftover clients into residual capacity.
fn extend(inst: &TwoDistInstance, open: Subset, method: KmMethod) -> Result<KmSolution> {
    let (matched, near) = near_matching(inst, &open);
    let mut load: HashMap<usize, u64> = HashMap::new();
    for i in near.iter().flatten() {
        *load.entry(*i).or_default() += 1;
    }
    let mut assignment = Vec::with_capacity(inst.clients);
    for slot in near {
        let i = match slot {
            Some(i) => i,
            None => {
                let i = open
                    .iter()
                    .find(|i| load.get(i).copied().unwrap_or(0) < inst.caps[*i])
                    .ok_or_else(|| PcsmError::Infeasible("open facilities lack capacity".into()))?;
                *load.entry(i).or_default() += 1;
                i
            }
        };
        assignment.push(i);
    }
    let cost = assignment.iter().enumerate().map(|(j, &i)| inst.distance(j, i)).sum::<Rational>();
    debug_assert_eq!(cost, inst.cost_of(matched));
    Ok(KmSolution { open, assignment, matched, cost, method })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacilityDoc {
    pub cap: u64,
}

/// JSON form: `{facilities:[{cap}], clients, dist_a_pairs:[[client,facility]], a, b, k}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmDoc {
    pub facilities: Vec<FacilityDoc>,
    pub clients: usize,
    #[serde(default)]
    pub dist_a_pairs: Vec<(usize, usize)>,
    pub a: Num,
    pub b: Num,
    pub k: usize,
}

impl TryFrom<KmDoc> for TwoDistInstance {
    type Error = PcsmError;

    fn try_from(doc: KmDoc) -> Result<Self> {
        TwoDistInstance::new(
            doc.facilities.iter().map(|f| f.cap).collect(),
            doc.clients,
            &doc.dist_a_pairs,
            doc.a.0,
            doc.b.0,
            doc.k,
        )
    }
}

impl From<&TwoDistInstance> for KmDoc {
    fn from(inst: &TwoDistInstance) -> Self {
        let mut pairs = Vec::new();
        for j in 0..inst.clients {
            for i in 0..inst.facilities() {
                if inst.near[j][i] {
                    pairs.push((j, i));
                }
            }
        }
        KmDoc {
            facilities: inst.caps.iter().map(|&cap| FacilityDoc { cap }).collect(),
            clients: inst.clients,
            dist_a_pairs: pairs,
            a: Num(inst.a),
            b: Num(inst.b),
            k: inst.k,
        }
    }
}

pub fn km_from_json(text: &str) -> Result<TwoDistInstance> {
    serde_json::from_str::<KmDoc>(text)?.try_into()
}

pub fn km_to_json(inst: &TwoDistInstance) -> String {
    serde_json::to_string(&KmDoc::from(inst)).expect("k-median documents always serialize")
}
