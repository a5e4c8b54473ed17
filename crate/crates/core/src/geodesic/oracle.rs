//! Exhaustive enumeration of open paths. Exponential; used as the reference
//! the dynamic program is checked against.

use std::cmp::Ordering;

use super::{build_result, check_env_dim, JumpConstraint, JumpCost, Outcome, Terminal, TimeSpacePoint};
use crate::env::{distance, lex_cmp, Environment, SpacePoint};
use crate::error::{invalid, Error, Result};

/// Largest number of candidate paths the enumeration accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1.0e7;

struct Search<'a> {
    env: &'a Environment,
    cost: JumpCost,
    cap: Option<f64>,
    first: usize,
    last: usize,
    /// final hop to a fixed point, if any
    target: Option<&'a [f64]>,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn point(&self, depth: usize, i: usize) -> &[f64] {
        self.env.layer(self.first + depth).point(i)
    }

    fn path_cmp(&self, a: &[usize], b: &[usize]) -> Ordering {
        for (depth, (&i, &j)) in a.iter().zip(b).enumerate() {
            match lex_cmp(self.point(depth, i), self.point(depth, j)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    fn offer(&mut self, value: f64) {
        let better = match &self.best {
            None => true,
            Some((bv, bp)) => value < *bv || (value == *bv && self.path_cmp(&self.current, bp) == Ordering::Less),
        };
        if better {
            self.best = Some((value, self.current.clone()));
        }
    }

    fn descend(&mut self, from: &[f64], acc: f64) {
        let depth = self.current.len();
        let t = self.first + depth;
        if t > self.last {
            match self.target {
                None => self.offer(acc),
                Some(w) => {
                    let dist = distance(from, w);
                    if self.cap.is_none_or(|c| dist <= c) {
                        self.offer(acc + self.cost.of(dist));
                    }
                }
            }
            return;
        }
        let layer = self.env.layer(t);
        for i in 0..layer.len() {
            let p = layer.point(i);
            let dist = distance(from, p);
            if self.cap.is_some_and(|c| dist > c) {
                continue;
            }
            self.current.push(i);
            let p = p.to_vec();
            self.descend(&p, acc + self.cost.of(dist));
            self.current.pop();
        }
    }
}

fn guard(env: &Environment, first: usize, last: usize) -> Result<()> {
    let paths: f64 = (first..=last).map(|k| env.layer(k).len() as f64).product();
    if paths > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            paths,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

/// Point-to-hyperplane geodesic by enumerating every open path of length `n`.
pub fn brute_force_geodesic(env: &Environment, alpha: f64, constraint: JumpConstraint) -> Result<Outcome> {
    let cost = JumpCost::new(alpha)?;
    guard(env, 1, env.n())?;
    let origin = env.origin();
    let mut search = Search {
        env,
        cost,
        cap: constraint.value(),
        first: 1,
        last: env.n(),
        target: None,
        current: Vec::with_capacity(env.n()),
        best: None,
    };
    search.descend(origin.coords(), 0.0);
    let Some((value, idx)) = search.best else {
        return Ok(Outcome::Unreachable);
    };
    let steps = idx
        .iter()
        .enumerate()
        .map(|(d, &i)| SpacePoint::from_slice(env.layer(1 + d).point(i)))
        .collect();
    let start = TimeSpacePoint::new(0, origin);
    Ok(Outcome::Reached(build_result(env, start, steps, alpha, value, constraint.value())))
}

/// Point-to-point geodesic by enumeration.
pub fn brute_force_point_to_point(
    env: &Environment,
    v: &TimeSpacePoint,
    w: &TimeSpacePoint,
    alpha: f64,
    terminal: Terminal,
    constraint: JumpConstraint,
) -> Result<Outcome> {
    check_env_dim(env, &v.x)?;
    check_env_dim(env, &w.x)?;
    if v.t >= w.t || w.t > env.n() {
        return invalid("need v.t < w.t <= n");
    }
    if terminal == Terminal::EnvPoint && env.layer(w.t).find(w.x.coords()).is_none() {
        return invalid("endpoint is not an environment point");
    }
    let cost = JumpCost::new(alpha)?;
    let (first, last) = (v.t + 1, w.t - 1);
    if first <= last {
        guard(env, first, last)?;
    }
    let mut search = Search {
        env,
        cost,
        cap: constraint.value(),
        first,
        last,
        target: Some(w.x.coords()),
        current: Vec::new(),
        best: None,
    };
    search.descend(v.x.coords(), 0.0);
    let Some((value, idx)) = search.best else {
        return Ok(Outcome::Unreachable);
    };
    let mut steps: Vec<SpacePoint> = idx
        .iter()
        .enumerate()
        .map(|(d, &i)| SpacePoint::from_slice(env.layer(first + d).point(i)))
        .collect();
    steps.push(w.x.clone());
    Ok(Outcome::Reached(build_result(env, v.clone(), steps, alpha, value, constraint.value())))
}
