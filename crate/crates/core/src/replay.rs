//! Ring-buffer experience replay with separately stored reward channels.
//!
//! Rewards are never baked in at storage time: each transition keeps its
//! curriculum-exempt, base and auxiliary channels, and batches are composed
//! with whatever curriculum weight is current when they are sampled.

use std::io::{Read, Write};

use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

pub const DEFAULT_CAPACITY: usize = 1_000_000;

const SNAPSHOT_MAGIC: u32 = u32::from_le_bytes(*b"RCRB");
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    /// Reward outside the curriculum blend (e.g. a goal bonus).
    pub r_fixed: f64,
    pub r_base: f64,
    pub r_aux: f64,
    pub next_state: Vec<f64>,
    pub terminated: bool,
    pub truncated: bool,
}

impl Transition {
    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(self.r_fixed.is_finite() && self.r_base.is_finite() && self.r_aux.is_finite()) {
            return Err(Error::NonFinite("transition reward".into()));
        }
        if !(finite(&self.state) && finite(&self.action) && finite(&self.next_state)) {
            return Err(Error::NonFinite("transition state or action".into()));
        }
        if self.terminated && self.truncated {
            return Err(Error::State("transition both terminated and truncated".into()));
        }
        Ok(())
    }
}

/// `r_fixed + (1 − w)·r_base + w·r_aux`.
pub fn compose_reward(t: &Transition, w: f64) -> Result<f64> {
    check_weight(w)?;
    Ok(compose(t.r_fixed, t.r_base, t.r_aux, w))
}

pub(crate) fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::config(format!("curriculum weight {w} outside [0, 1]")));
    }
    Ok(())
}

#[inline]
pub(crate) fn compose(r_fixed: f64, r_base: f64, r_aux: f64, w: f64) -> f64 {
    r_fixed + (1.0 - w) * r_base + w * r_aux
}

/// A sampled minibatch laid out as matrices for the learners.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub next_states: Matrix,
    pub r_fixed: Vec<f64>,
    pub r_base: Vec<f64>,
    pub r_aux: Vec<f64>,
    pub terminated: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.r_base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_base.is_empty()
    }

    /// Per-sample rewards composed with weight `w`.
    pub fn composed_rewards(&self, w: f64) -> Result<Vec<f64>> {
        check_weight(w)?;
        Ok((0..self.len())
            .map(|i| compose(self.r_fixed[i], self.r_base[i], self.r_aux[i], w))
            .collect())
    }

    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let rows = |f: fn(&Transition) -> &Vec<f64>| -> Result<Matrix> {
            Matrix::from_rows(&ts.iter().map(|t| f(t).clone()).collect::<Vec<_>>())
        };
        Ok(Self {
            states: rows(|t| &t.state)?,
            actions: rows(|t| &t.action)?,
            next_states: rows(|t| &t.next_state)?,
            r_fixed: ts.iter().map(|t| t.r_fixed).collect(),
            r_base: ts.iter().map(|t| t.r_base).collect(),
            r_aux: ts.iter().map(|t| t.r_aux).collect(),
            terminated: ts.iter().map(|t| t.terminated).collect(),
        })
    }
}

/// Fixed-capacity FIFO replay storage.
///
/// Storage grows lazily up to `capacity`, after which the oldest entry is
/// overwritten.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    next_states: Vec<f64>,
    r_fixed: Vec<f64>,
    r_base: Vec<f64>,
    r_aux: Vec<f64>,
    terminated: Vec<bool>,
    truncated: Vec<bool>,
    cursor: usize,
    size: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            obs_dim,
            act_dim,
            states: Vec::new(),
            actions: Vec::new(),
            next_states: Vec::new(),
            r_fixed: Vec::new(),
            r_base: Vec::new(),
            r_aux: Vec::new(),
            terminated: Vec::new(),
            truncated: Vec::new(),
            cursor: 0,
            size: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn clear(&mut self) {
        *self = Self::new(self.capacity, self.obs_dim, self.act_dim).expect("capacity already validated");
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        t.validate()?;
        if t.state.len() != self.obs_dim || t.next_state.len() != self.obs_dim || t.action.len() != self.act_dim {
            return Err(Error::config(format!(
                "transition shapes ({}, {}, {}) do not match buffer ({}, {})",
                t.state.len(),
                t.action.len(),
                t.next_state.len(),
                self.obs_dim,
                self.act_dim
            )));
        }
        if self.size < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.next_states.extend_from_slice(&t.next_state);
            self.r_fixed.push(t.r_fixed);
            self.r_base.push(t.r_base);
            self.r_aux.push(t.r_aux);
            self.terminated.push(t.terminated);
            self.truncated.push(t.truncated);
            self.size += 1;
        } else {
            let i = self.cursor;
            let (o, a) = (self.obs_dim, self.act_dim);
            self.states[i * o..(i + 1) * o].copy_from_slice(&t.state);
            self.actions[i * a..(i + 1) * a].copy_from_slice(&t.action);
            self.next_states[i * o..(i + 1) * o].copy_from_slice(&t.next_state);
            self.r_fixed[i] = t.r_fixed;
            self.r_base[i] = t.r_base;
            self.r_aux[i] = t.r_aux;
            self.terminated[i] = t.terminated;
            self.truncated[i] = t.truncated;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Transition at physical slot `i`.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.size {
            return None;
        }
        let (o, a) = (self.obs_dim, self.act_dim);
        Some(Transition {
            state: self.states[i * o..(i + 1) * o].to_vec(),
            action: self.actions[i * a..(i + 1) * a].to_vec(),
            r_fixed: self.r_fixed[i],
            r_base: self.r_base[i],
            r_aux: self.r_aux[i],
            next_state: self.next_states[i * o..(i + 1) * o].to_vec(),
            terminated: self.terminated[i],
            truncated: self.truncated[i],
        })
    }

    /// Transitions from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = Transition> + '_ {
        let start = if self.size < self.capacity { 0 } else { self.cursor };
        (0..self.size).map(move |k| self.get((start + k) % self.size).expect("index in range"))
    }

    /// Uniform indices drawn with replacement.
    pub fn sample_indices(&self, batch_size: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if batch_size > self.size {
            return Err(Error::Insufficient(format!(
                "batch of {batch_size} requested from {} stored transitions",
                self.size
            )));
        }
        Ok((0..batch_size).map(|_| rng.index(self.size)).collect())
    }

    pub fn sample(&self, batch_size: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        Ok(self
            .sample_indices(batch_size, rng)?
            .into_iter()
            .map(|i| self.get(i).expect("sampled index in range"))
            .collect())
    }

    /// Same draws as [`ReplayBuffer::sample`], gathered straight into matrices.
    pub fn sample_batch(&self, batch_size: usize, rng: &mut Rng) -> Result<Batch> {
        let idx = self.sample_indices(batch_size, rng)?;
        let (o, a) = (self.obs_dim, self.act_dim);
        let gather = |src: &[f64], width: usize| {
            let mut out = Vec::with_capacity(idx.len() * width);
            for &i in &idx {
                out.extend_from_slice(&src[i * width..(i + 1) * width]);
            }
            out
        };
        Ok(Batch {
            states: Matrix::from_vec(idx.len(), o, gather(&self.states, o))?,
            actions: Matrix::from_vec(idx.len(), a, gather(&self.actions, a))?,
            next_states: Matrix::from_vec(idx.len(), o, gather(&self.next_states, o))?,
            r_fixed: idx.iter().map(|&i| self.r_fixed[i]).collect(),
            r_base: idx.iter().map(|&i| self.r_base[i]).collect(),
            r_aux: idx.iter().map(|&i| self.r_aux[i]).collect(),
            terminated: idx.iter().map(|&i| self.terminated[i]).collect(),
        })
    }

    /// Writes the buffer, oldest transition first.
    ///
    /// Layout: six little-endian `u32` (magic, version, capacity, size,
    /// obs_dim, act_dim), then per transition the little-endian `f64`
    /// sequence state, action, r_fixed, r_base, r_aux, next_state,
    /// terminated, truncated (flags as 0.0 / 1.0).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        for v in [
            SNAPSHOT_MAGIC,
            SNAPSHOT_VERSION,
            to_u32(self.capacity)?,
            to_u32(self.size)?,
            to_u32(self.obs_dim)?,
            to_u32(self.act_dim)?,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for t in self.iter_chronological() {
            let flags = [f64::from(u8::from(t.terminated)), f64::from(u8::from(t.truncated))];
            for v in t
                .state
                .iter()
                .chain(&t.action)
                .chain(&[t.r_fixed, t.r_base, t.r_aux])
                .chain(&t.next_state)
                .chain(&flags)
            {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u32; 6];
        for h in &mut header {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b);
        }
        let [magic, version, capacity, size, obs_dim, act_dim] = header;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a replay snapshot".into()));
        }
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported replay snapshot version {version}")));
        }
        if size > capacity {
            return Err(Error::Format("snapshot size exceeds capacity".into()));
        }
        let (o, a) = (obs_dim as usize, act_dim as usize);
        let mut buf = Self::new(capacity as usize, o, a)?;
        let mut read_f64 = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        for _ in 0..size {
            let state = (0..o).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
            let action = (0..a).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
            let (r_fixed, r_base, r_aux) = (read_f64()?, read_f64()?, read_f64()?);
            let next_state = (0..o).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
            let terminated = read_f64()? != 0.0;
            let truncated = read_f64()? != 0.0;
            buf.push(Transition {
                state,
                action,
                r_fixed,
                r_base,
                r_aux,
                next_state,
                terminated,
                truncated,
            })?;
        }
        Ok(buf)
    }
}

fn to_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit the snapshot header")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::numerics::Rng;

    fn tr(k: f64) -> Transition {
        Transition {
            state: vec![k],
            action: vec![-k],
            r_fixed: 0.0,
            r_base: k,
            r_aux: -k,
            next_state: vec![k + 1.0],
            terminated: false,
            truncated: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(2, 1, 1).unwrap();
        for k in 1..=3 {
            b.push(tr(k as f64)).unwrap();
        }
        assert_eq!(b.len(), 2);
        let held: Vec<f64> = b.iter_chronological().map(|t| t.r_base).collect();
        assert_eq!(held, vec![2.0, 3.0]);
    }

    #[test]
    fn push_one_into_empty() {
        let mut b = ReplayBuffer::new(DEFAULT_CAPACITY, 1, 1).unwrap();
        b.push(tr(0.5)).unwrap();
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn size_saturates_at_capacity() {
        let mut b = ReplayBuffer::new(DEFAULT_CAPACITY, 1, 1).unwrap();
        for k in 0..DEFAULT_CAPACITY + 1 {
            b.push(tr(k as f64)).unwrap();
        }
        assert_eq!(b.len(), DEFAULT_CAPACITY);
        assert_eq!(b.iter_chronological().next().unwrap().r_base, 1.0);
    }

    #[test]
    fn non_finite_transition_rejected() {
        let mut b = ReplayBuffer::new(4, 1, 1).unwrap();
        let mut t = tr(1.0);
        t.r_aux = f64::INFINITY;
        assert!(matches!(b.push(t), Err(Error::NonFinite(_))));
        let mut t = tr(1.0);
        t.state[0] = f64::NAN;
        assert!(b.push(t).is_err());
        assert!(b.is_empty());
    }

    #[test]
    fn sampling_preconditions() {
        let mut b = ReplayBuffer::new(8, 1, 1).unwrap();
        b.push(tr(7.0)).unwrap();
        let mut rng = Rng::new(0);
        assert!(matches!(b.sample(4, &mut rng), Err(Error::Insufficient(_))));
        let one = b.sample(1, &mut rng).unwrap();
        assert_eq!(one, vec![tr(7.0)]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut b = ReplayBuffer::new(2000, 1, 1).unwrap();
        for k in 0..1000 {
            b.push(tr(k as f64)).unwrap();
        }
        let mut a = b.sample_indices(128, &mut Rng::new(77)).unwrap();
        let mut c = b.sample_indices(128, &mut Rng::new(77)).unwrap();
        assert_eq!(a, c);
        a.sort_unstable();
        c.sort_unstable();
        assert_eq!(a, c);
        let batch = b.sample_batch(128, &mut Rng::new(77)).unwrap();
        let listed = b.sample(128, &mut Rng::new(77)).unwrap();
        assert_eq!(batch.r_base, listed.iter().map(|t| t.r_base).collect::<Vec<_>>());
    }

    #[test]
    fn compose_examples() {
        let mut t = tr(0.0);
        t.r_base = 0.8;
        t.r_aux = -0.4;
        assert_eq!(compose_reward(&t, 0.0).unwrap(), 0.8);
        assert!((compose_reward(&t, 0.5).unwrap() - 0.2).abs() < 1e-15);
        t.r_fixed = 10.0;
        t.r_base = 0.02;
        t.r_aux = -0.5;
        assert!((compose_reward(&t, 0.75).unwrap() - 9.63).abs() < 1e-12);
        assert!(compose_reward(&t, 1.01).is_err());
        assert!(compose_reward(&t, -0.1).is_err());
    }

    #[test]
    fn snapshot_roundtrip_preserves_order_and_bits() {
        let mut b = ReplayBuffer::new(3, 1, 1).unwrap();
        for k in 0..5 {
            let mut t = tr(k as f64 + 0.1);
            t.terminated = k == 3;
            t.truncated = k == 4;
            t.r_fixed = if k == 3 { 10.0 } else { 0.0 };
            b.push(t).unwrap();
        }
        let mut bytes = Vec::new();
        b.write_snapshot(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 24 + 3 * 8 * 8);
        assert_eq!(&bytes[..4], b"RCRB");
        let back = ReplayBuffer::read_snapshot(bytes.as_slice()).unwrap();
        let a: Vec<_> = b.iter_chronological().collect();
        let c: Vec<_> = back.iter_chronological().collect();
        assert_eq!(a, c);
        assert_eq!(back.capacity(), 3);

        bytes[0] ^= 0xff;
        assert!(matches!(ReplayBuffer::read_snapshot(bytes.as_slice()), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn recomposition_endpoints_are_exact(
            rf in -20.0f64..20.0, rb in -5.0f64..5.0, ra in -5.0f64..5.0, w in 0.0f64..=1.0,
        ) {
            let t = Transition { r_fixed: rf, r_base: rb, r_aux: ra, ..tr(0.0) };
            prop_assert_eq!(compose_reward(&t, 0.0).unwrap().to_bits(), (rf + rb).to_bits());
            prop_assert_eq!(compose_reward(&t, 1.0).unwrap().to_bits(), (rf + ra).to_bits());
            let mid = compose_reward(&t, 0.5).unwrap();
            let avg = 0.5 * (compose_reward(&t, 0.0).unwrap() + compose_reward(&t, 1.0).unwrap());
            prop_assert!((mid - avg).abs() <= 1e-12 * (1.0 + rf.abs() + rb.abs() + ra.abs()));
            // affine in w
            let lin = rf + rb + w * (ra - rb);
            prop_assert!((compose_reward(&t, w).unwrap() - lin).abs() <= 1e-12 * (1.0 + rf.abs() + rb.abs() + ra.abs()));
        }
    }
}
