//! Large-neighbourhood search around the incumbent: a cluster of related
//! sessions is freed and re-solved exactly under a node cap.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::feas::{placement_cost, unscheduled_cost};
use crate::solve::{Budget, Trace};

use super::exact::Exact;
use super::problem::{Cost, Plc, Problem};

const MIN_FREE: usize = 3;
const MAX_FREE: usize = 10;
const NODES_PER_FREE: u64 = 1_500;

pub(crate) type Incumbent = Option<(Vec<Option<Plc>>, Cost)>;

/// Improves `best` until `stale_limit` consecutive neighbourhoods fail or
/// the budget stops.
pub(crate) fn improve(
    prob: &Problem,
    rng: &mut ChaCha8Rng,
    budget: &mut Budget,
    trace: &mut Trace,
    best: &mut Incumbent,
    stale_limit: u64,
) {
    let n = prob.sessions.len();
    if n < 2 {
        return;
    }
    let mut stale = 0;
    while stale < stale_limit && !budget.tick() {
        let Some((plc, cost)) = best.clone() else { return };
        // Grow the neighbourhood while the search stagnates.
        let grow = (stale * (MAX_FREE - MIN_FREE) as u64 / stale_limit.max(1)) as usize;
        let k = (MIN_FREE + grow + rng.gen_range(0..=2)).min(MAX_FREE).min(n);
        let free = neighbourhood(prob, &plc, rng, k);
        budget.set_cap(Some(NODES_PER_FREE * k as u64));
        let mut sub = Exact::around(prob, &plc, &free, Some((plc.clone(), cost)));
        sub.run(budget, trace);
        budget.set_cap(None);
        match sub.best {
            Some((p, c)) if c < cost => {
                *best = Some((p, c));
                stale = 0;
            }
            _ => stale += 1,
        }
    }
}

/// A seed session, preferably one that costs something, plus the `k - 1`
/// sessions most entangled with it.
fn neighbourhood(prob: &Problem, plc: &[Option<Plc>], rng: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
    let n = prob.sessions.len();
    let costly: Vec<usize> = (0..n)
        .filter(|&s| {
            let spec = prob.sessions[s].spec;
            let c = match plc[s] {
                Some(p) => placement_cost(spec, p.period, p.start, p.len),
                None => unscheduled_cost(spec),
            };
            c != [0; 6]
        })
        .collect();
    let seed = if !costly.is_empty() && rng.gen_bool(0.7) {
        costly[rng.gen_range(0..costly.len())]
    } else {
        rng.gen_range(0..n)
    };
    let a = &prob.sessions[seed];
    let pa = plc[seed];
    let mut scored: Vec<(u32, usize)> = (0..n)
        .filter(|&q| q != seed)
        .map(|q| {
            let b = &prob.sessions[q];
            let pb = plc[q];
            let same_period = match (pa, pb) {
                (Some(x), Some(y)) => x.period == y.period,
                _ => true,
            };
            let mut score = 0;
            if b.op == a.op {
                score += if same_period { 4 } else { 2 };
            }
            if b.pat == a.pat {
                score += 4;
            }
            if let (Some(x), Some(y)) = (pa, pb) {
                if same_period && x.loc == y.loc {
                    score += 3;
                } else if same_period && b.mac == a.mac {
                    score += 1;
                }
            }
            (score * 4 + rng.gen_range(0..6), q)
        })
        .collect();
    scored.sort_unstable_by(|x, y| y.cmp(x));
    let mut free: Vec<usize> = scored.into_iter().take(k - 1).map(|(_, q)| q).collect();
    free.push(seed);
    free
}
