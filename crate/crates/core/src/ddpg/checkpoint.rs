//! Versioned little-endian binary checkpoints. Layout is documented in
//! docs/FORMATS.md; the replay buffer is not stored.

use std::io::{self, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::{
    actor_layers, critic_layers, Activation, DdpgAgent, DdpgConfig, LayerShape, Network, NoiseProcess, Optimizer,
    ReplayBuffer, Topology,
};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FEPKDDPG";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    Magic,
    #[error("checkpoint version {found} not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint {what} shape mismatch")]
    Shape { what: &'static str },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> io::Result<()> {
        self.0.write_all(&[v])
    }
    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64s(&mut self, v: &[f64]) -> io::Result<()> {
        self.u64(v.len() as u64)?;
        v.iter().try_for_each(|x| self.f64(*x))
    }
    fn bytes(&mut self, v: &[u8]) -> io::Result<()> {
        self.u32(v.len() as u32)?;
        self.0.write_all(v)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> io::Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u8(&mut self) -> io::Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> io::Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> io::Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> io::Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn f64s(&mut self, limit: usize) -> Result<Vec<f64>, CheckpointError> {
        let n = self.u64()? as usize;
        if n > limit {
            return Err(CheckpointError::Corrupt(format!("vector length {n} exceeds {limit}")));
        }
        (0..n).map(|_| self.f64().map_err(CheckpointError::from)).collect()
    }
    fn bytes(&mut self, limit: usize) -> Result<Vec<u8>, CheckpointError> {
        let n = self.u32()? as usize;
        if n > limit {
            return Err(CheckpointError::Corrupt(format!("block length {n} exceeds {limit}")));
        }
        let mut v = vec![0u8; n];
        self.0.read_exact(&mut v)?;
        Ok(v)
    }
}

fn write_network<W: Write>(w: &mut Writer<W>, net: &Network) -> io::Result<()> {
    w.u8(match net.topology {
        Topology::Chain => 0,
        Topology::Critic => 1,
    })?;
    w.u32(net.layers.len() as u32)?;
    for l in &net.layers {
        w.u32(l.inputs as u32)?;
        w.u32(l.outputs as u32)?;
        w.u8(l.activation.code())?;
    }
    w.f64s(&net.params)
}

fn read_network<R: Read>(r: &mut Reader<R>, expected: &[LayerShape], what: &'static str) -> Result<Network, CheckpointError> {
    let topology = match r.u8()? {
        0 => Topology::Chain,
        1 => Topology::Critic,
        t => return Err(CheckpointError::Corrupt(format!("unknown topology {t}"))),
    };
    let n = r.u32()? as usize;
    if n != expected.len() {
        return Err(CheckpointError::Shape { what });
    }
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let inputs = r.u32()? as usize;
        let outputs = r.u32()? as usize;
        let activation = Activation::from_code(r.u8()?)
            .ok_or_else(|| CheckpointError::Corrupt("unknown activation".into()))?;
        layers.push(LayerShape { inputs, outputs, activation });
    }
    if layers != expected {
        return Err(CheckpointError::Shape { what });
    }
    let count: usize = layers.iter().map(LayerShape::param_count).sum();
    let params = r.f64s(count)?;
    Network::from_params(topology, layers, params).map_err(|_| CheckpointError::Shape { what })
}

fn write_optimizer<W: Write>(w: &mut Writer<W>, o: &Optimizer) -> io::Result<()> {
    w.f64(o.learn_rate)?;
    w.u64(o.steps)?;
    w.f64s(&o.first_moment)?;
    w.f64s(&o.second_moment)
}

fn read_optimizer<R: Read>(r: &mut Reader<R>, mut o: Optimizer, what: &'static str) -> Result<Optimizer, CheckpointError> {
    let n = o.first_moment.len();
    o.learn_rate = r.f64()?;
    o.steps = r.u64()?;
    o.first_moment = r.f64s(n)?;
    o.second_moment = r.f64s(n)?;
    if o.first_moment.len() != n || o.second_moment.len() != n {
        return Err(CheckpointError::Shape { what });
    }
    Ok(o)
}

impl DdpgAgent {
    pub fn write_checkpoint<W: Write>(&self, out: W) -> Result<(), CheckpointError> {
        let mut w = Writer(out);
        w.0.write_all(CHECKPOINT_MAGIC)?;
        w.u32(CHECKPOINT_VERSION)?;
        let config = toml::to_string(&self.config).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        w.bytes(config.as_bytes())?;
        w.f64s(&self.obs_offset)?;
        w.f64s(&self.obs_scale)?;
        for net in [&self.actor, &self.critic, &self.actor_target, &self.critic_target] {
            write_network(&mut w, net)?;
        }
        w.f64(self.noise.variance)?;
        w.f64(self.noise.decay)?;
        w.f64(self.noise.min_variance)?;
        w.0.write_all(&self.rng.get_seed())?;
        w.u64(self.rng.get_stream())?;
        w.0.write_all(&self.rng.get_word_pos().to_le_bytes())?;
        write_optimizer(&mut w, &self.actor_optimizer)?;
        write_optimizer(&mut w, &self.critic_optimizer)?;
        w.u64(self.updates)?;
        w.0.flush()?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(input: R) -> Result<Self, CheckpointError> {
        let mut r = Reader(input);
        if &r.array::<8>()? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version { found: version, expected: CHECKPOINT_VERSION });
        }
        let text = String::from_utf8(r.bytes(1 << 20)?).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let config: DdpgConfig = toml::from_str(&text).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        config.validate().map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let d = config.obs_dim;
        let obs_offset = r.f64s(d)?;
        let obs_scale = r.f64s(d)?;
        if obs_offset.len() != d || obs_scale.len() != d {
            return Err(CheckpointError::Shape { what: "normalization" });
        }
        let a_layers = actor_layers(d, config.actor_hidden);
        let c_layers = critic_layers(d, config.critic_obs_hidden, config.critic_action_hidden);
        let actor = read_network(&mut r, &a_layers, "actor")?;
        let critic = read_network(&mut r, &c_layers, "critic")?;
        let actor_target = read_network(&mut r, &a_layers, "target actor")?;
        let critic_target = read_network(&mut r, &c_layers, "target critic")?;
        let mut noise = NoiseProcess::new(r.f64()?, r.f64()?);
        noise.min_variance = r.f64()?;
        let mut rng = ChaCha8Rng::from_seed(r.array::<32>()?);
        rng.set_stream(r.u64()?);
        rng.set_word_pos(u128::from_le_bytes(r.array::<16>()?));
        let actor_optimizer = read_optimizer(
            &mut r,
            Optimizer::new(config.optimizer, config.actor_learn_rate, actor.weight_mask()),
            "actor optimizer",
        )?;
        let critic_optimizer = read_optimizer(
            &mut r,
            Optimizer::new(config.optimizer, config.critic_learn_rate, critic.weight_mask()),
            "critic optimizer",
        )?;
        let updates = r.u64()?;
        let mut trailing = [0u8; 1];
        if r.0.read(&mut trailing)? != 0 {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        Ok(Self {
            replay: ReplayBuffer::new(config.buffer_capacity, d),
            config,
            actor,
            critic,
            actor_target,
            critic_target,
            actor_optimizer,
            critic_optimizer,
            noise,
            rng,
            obs_offset,
            obs_scale,
            updates,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_checkpoint(&mut v).expect("writing to memory cannot fail");
        v
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        // Write then rename so an interrupted save never leaves a truncated checkpoint.
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)?;
        Self::read_checkpoint(bytes.as_slice())
    }
}
