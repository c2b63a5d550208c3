//! Binary agent checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! u32 magic "RCAG" | u32 version | u32 kind (0 td3, 1 sac)
//! u32 obs_dim | u32 act_dim | u64 update counter | u64 actor update counter
//! f64 log_alpha (0 for td3)
//! u32 network count, then per network:
//!     u32 head | u32 layer count | (u32 in, u32 out) per layer | f64 parameters
//! u32 optimizer count, then per optimizer:
//!     u64 step | u64 length | f64 first moments | f64 second moments
//! ```
//!
//! Parameters are stored in [`MlpParams::flatten`] order. Networks come
//! actor first; the actor alone is enough to rebuild a [`Policy`].

use std::io::{Read, Write};

use super::{Agent, AgentConfig, AgentKind};
use crate::numerics::{squashed_gaussian_sample, Activation, Dense, Matrix, MlpParams, OptimState, OutputHead};
use crate::{Error, Result};

const MAGIC: u32 = u32::from_le_bytes(*b"RCAG");
const VERSION: u32 = 1;
const MAX_ENTRIES: usize = 16;

/// A frozen actor that acts deterministically.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    kind: AgentKind,
    actor: MlpParams,
}

impl Policy {
    pub fn new(kind: AgentKind, actor: MlpParams) -> Self {
        Self { kind, actor }
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn actor(&self) -> &MlpParams {
        &self.actor
    }

    pub fn act_dim(&self) -> usize {
        match self.kind {
            AgentKind::Td3 => self.actor.output_dim(),
            AgentKind::Sac => self.actor.output_dim() / 2,
        }
    }

    /// TD3 returns the actor output; SAC returns `tanh(mean)`.
    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let out = self.actor.forward(obs)?;
        Ok(match self.kind {
            AgentKind::Td3 => out,
            AgentKind::Sac => {
                let d = self.act_dim();
                squashed_gaussian_sample(&out[..d], &out[d..], None).action
            }
        })
    }

    /// Reads the actor out of an agent checkpoint.
    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let header = read_header(&mut r)?;
        let n = get_u32(&mut r)?;
        if n == 0 {
            return Err(Error::Format("checkpoint has no networks".into()));
        }
        Ok(Self::new(header.kind, read_network(&mut r)?))
    }
}

struct Header {
    kind: AgentKind,
    obs_dim: usize,
    act_dim: usize,
    updates: u64,
    actor_updates: u64,
    log_alpha: f64,
}

pub(super) fn save<W: Write>(agent: &Agent, mut w: W) -> Result<()> {
    put_u32(&mut w, MAGIC)?;
    put_u32(&mut w, VERSION)?;
    let (kind, obs_dim, act_dim, updates, actor_updates, log_alpha, nets, opts): (
        u32,
        usize,
        usize,
        u64,
        u64,
        f64,
        Vec<&MlpParams>,
        Vec<&OptimState>,
    ) = match agent {
        Agent::Td3(a) => (
            0,
            a.actor.input_dim(),
            a.actor.output_dim(),
            a.critic_updates,
            a.actor_updates,
            0.0,
            a.networks().to_vec(),
            a.optimizers().to_vec(),
        ),
        Agent::Sac(a) => (
            1,
            a.actor.input_dim(),
            a.act_dim,
            a.updates,
            a.updates,
            a.log_alpha[0],
            a.networks().to_vec(),
            a.optimizers().to_vec(),
        ),
    };
    put_u32(&mut w, kind)?;
    put_u32(&mut w, dim_u32(obs_dim)?)?;
    put_u32(&mut w, dim_u32(act_dim)?)?;
    put_u64(&mut w, updates)?;
    put_u64(&mut w, actor_updates)?;
    put_f64(&mut w, log_alpha)?;
    put_u32(&mut w, dim_u32(nets.len())?)?;
    for net in nets {
        write_network(&mut w, net)?;
    }
    put_u32(&mut w, dim_u32(opts.len())?)?;
    for opt in opts {
        put_u64(&mut w, opt.step_count)?;
        put_u64(&mut w, opt.first_moment.len() as u64)?;
        for &v in opt.first_moment.iter().chain(&opt.second_moment) {
            put_f64(&mut w, v)?;
        }
    }
    Ok(())
}

pub(super) fn load<R: Read>(mut r: R, cfg: &AgentConfig, seed: u64) -> Result<Agent> {
    let h = read_header(&mut r)?;
    let mut agent = Agent::new(h.kind, h.obs_dim, h.act_dim, cfg, seed)?;
    let n_nets = get_u32(&mut r)? as usize;
    if n_nets > MAX_ENTRIES {
        return Err(Error::Format(format!("implausible network count {n_nets}")));
    }
    let mut nets = Vec::with_capacity(n_nets);
    for _ in 0..n_nets {
        nets.push(read_network(&mut r)?);
    }
    let n_opts = get_u32(&mut r)? as usize;
    if n_opts > MAX_ENTRIES {
        return Err(Error::Format(format!("implausible optimizer count {n_opts}")));
    }
    let mut opts = Vec::with_capacity(n_opts);
    for _ in 0..n_opts {
        let step = get_u64(&mut r)?;
        let len = get_u64(&mut r)? as usize;
        let first = get_f64s(&mut r, len)?;
        let second = get_f64s(&mut r, len)?;
        opts.push((step, first, second));
    }

    match &mut agent {
        Agent::Td3(a) => {
            restore_networks(a.networks_mut(), nets)?;
            restore_optimizers(a.optimizers_mut(), opts)?;
            a.critic_updates = h.updates;
            a.actor_updates = h.actor_updates;
        }
        Agent::Sac(a) => {
            restore_networks(a.networks_mut(), nets)?;
            restore_optimizers(a.optimizers_mut(), opts)?;
            a.updates = h.updates;
            a.log_alpha[0] = h.log_alpha;
        }
    }
    Ok(agent)
}

fn restore_networks<const N: usize>(targets: [&mut MlpParams; N], nets: Vec<MlpParams>) -> Result<()> {
    if nets.len() != N {
        return Err(Error::Format(format!("checkpoint holds {} networks, expected {N}", nets.len())));
    }
    for (t, n) in targets.into_iter().zip(nets) {
        if !t.same_shape(&n) || t.head != n.head {
            return Err(Error::Format("checkpoint network shape differs from config".into()));
        }
        *t = n;
    }
    Ok(())
}

fn restore_optimizers<const M: usize>(
    targets: [&mut OptimState; M],
    opts: Vec<(u64, Vec<f64>, Vec<f64>)>,
) -> Result<()> {
    if opts.len() != M {
        return Err(Error::Format(format!("checkpoint holds {} optimizers, expected {M}", opts.len())));
    }
    for (o, (step, first, second)) in targets.into_iter().zip(opts) {
        if o.first_moment.len() != first.len() {
            return Err(Error::Format("checkpoint optimizer size differs from config".into()));
        }
        o.step_count = step;
        o.first_moment = first;
        o.second_moment = second;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    if get_u32(r)? != MAGIC {
        return Err(Error::Format("not an agent checkpoint".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let kind = match get_u32(r)? {
        0 => AgentKind::Td3,
        1 => AgentKind::Sac,
        k => return Err(Error::Format(format!("unknown agent kind {k}"))),
    };
    Ok(Header {
        kind,
        obs_dim: get_u32(r)? as usize,
        act_dim: get_u32(r)? as usize,
        updates: get_u64(r)?,
        actor_updates: get_u64(r)?,
        log_alpha: get_f64(r)?,
    })
}

fn head_code(head: OutputHead) -> u32 {
    match head {
        OutputHead::Linear => 0,
        OutputHead::TanhBounded => 1,
        OutputHead::Gaussian => 2,
    }
}

fn write_network<W: Write>(w: &mut W, net: &MlpParams) -> Result<()> {
    put_u32(w, head_code(net.head))?;
    put_u32(w, dim_u32(net.layers.len())?)?;
    for l in &net.layers {
        put_u32(w, dim_u32(l.in_dim())?)?;
        put_u32(w, dim_u32(l.out_dim())?)?;
    }
    for v in net.flatten() {
        put_f64(w, v)?;
    }
    Ok(())
}

fn read_network<R: Read>(r: &mut R) -> Result<MlpParams> {
    let head = match get_u32(r)? {
        0 => OutputHead::Linear,
        1 => OutputHead::TanhBounded,
        2 => OutputHead::Gaussian,
        h => return Err(Error::Format(format!("unknown output head {h}"))),
    };
    let n_layers = get_u32(r)? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(Error::Format(format!("implausible layer count {n_layers}")));
    }
    let mut shapes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        shapes.push((get_u32(r)? as usize, get_u32(r)? as usize));
    }
    let layers = shapes
        .iter()
        .map(|&(i, o)| {
            Ok(Dense {
                weights: Matrix::zeros(i, o),
                biases: vec![0.0; o],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut net = MlpParams::from_layers(layers, Activation::Relu, head).map_err(|e| Error::Format(e.to_string()))?;
    let values = get_f64s(r, net.num_params())?;
    net.assign_flat(&values)?;
    Ok(net)
}

fn dim_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("size {n} does not fit the checkpoint format")))
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}
