//! Deterministic keyed random streams and the zero-sum noise dealer.
//!
//! Every random draw in the pipeline is keyed by
//! `(master_seed, party, slot, role)` and expands to its own generator
//! state, so distinct draws never share a stream. That makes the whole
//! pipeline a pure function of the master seed: any parallel schedule
//! produces bit-identical output to the serial one.
//!
//! Streams are xoshiro256++ seeded through splitmix64 absorption of the key
//! fields, the standard construction for reproducible simulation streams.
//! This is statistical-quality randomness, not cryptographic randomness;
//! secure noise generation is explicitly out of scope here.
//!
//! The correlated component follows the CAPE construction: a trusted dealer
//! draws `S` i.i.d. vectors with inflated variance `tau_e^2 S/(S-1)` and
//! centers them, which gives each client an exactly `N(0, tau_e^2)` marginal
//! while the sum across clients is identically zero.

use crate::error::{Error, Result};
use ndarray::Array1;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

/// Party owning a stream: one of the `S` clients, or the server/dealer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Client(u32),
    Server,
}

/// What a stream is consumed for. Distinct roles at the same `(party, slot)`
/// are independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    FeatureLocal,
    LabelLocal,
    FeatureCorrelated,
    LabelCorrelated,
    Partition,
    MixSelect,
}

impl StreamRole {
    fn code(self) -> u64 {
        match self {
            StreamRole::FeatureLocal => 1,
            StreamRole::LabelLocal => 2,
            StreamRole::FeatureCorrelated => 3,
            StreamRole::LabelCorrelated => 4,
            StreamRole::Partition => 5,
            StreamRole::MixSelect => 6,
        }
    }
}

/// Address of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub party: Party,
    /// Sample index `t` the stream belongs to (0 for whole-run roles).
    pub slot: u64,
    pub role: StreamRole,
}

impl StreamKey {
    pub fn new(master_seed: u64, party: Party, slot: u64, role: StreamRole) -> Self {
        StreamKey { master_seed, party, slot, role }
    }

    /// Instantiates the stream. Key derivation absorbs each field through a
    /// full-avalanche splitmix64 round, then squeezes the 256-bit generator
    /// state.
    pub fn rng(&self) -> StreamRng {
        let party_code = match self.party {
            Party::Client(id) => 1u64 << 32 | u64::from(id),
            Party::Server => 2u64 << 32,
        };
        let mut state = splitmix64(self.master_seed ^ 0x6a09_e667_f3bc_c908);
        for field in [party_code, self.slot, self.role.code()] {
            state = splitmix64(state ^ field.wrapping_mul(0xd1b5_4a32_d192_ed03));
        }
        let mut seed = [0u64; 4];
        for word in &mut seed {
            state = splitmix64(state);
            *word = state;
        }
        if seed == [0u64; 4] {
            seed[0] = 0x9e37_79b9_7f4a_7c15;
        }
        StreamRng { state: seed }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256++ with fixed, platform-independent output. The all-zero
/// lockup state is excluded at seeding time.
#[derive(Debug, Clone)]
pub struct StreamRng {
    state: [u64; 4],
}

impl RngCore for StreamRng {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        let mut chunks = dest.chunks_exact_mut(8);
        for chunk in &mut chunks {
            chunk.copy_from_slice(&self.next_u64().to_le_bytes());
        }
        let rest = chunks.into_remainder();
        if !rest.is_empty() {
            let bytes = self.next_u64().to_le_bytes();
            rest.copy_from_slice(&bytes[..rest.len()]);
        }
    }
}

/// Draws a `dim`-vector of i.i.d. `N(0, tau^2)` entries from the stream at
/// `key`. `tau = 0` returns the zero vector.
pub fn draw_gaussian(key: StreamKey, dim: usize, tau: f64) -> Result<Array1<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("noise scale must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(Array1::zeros(dim));
    }
    let mut rng = key.rng();
    Ok(Array1::from_iter((0..dim).map(|_| tau * rng.sample::<f64, _>(StandardNormal))))
}

/// Deals the correlated noise for one slot: `S` vectors of length `dim`,
/// each marginally `N(0, tau_e^2)` per coordinate, summing to exactly zero.
///
/// `S = 1` admits only `tau_e = 0` (a single client has nothing to cancel
/// against) and yields one zero vector.
pub fn draw_zero_sum(
    master_seed: u64,
    slot: u64,
    role: StreamRole,
    num_clients: usize,
    dim: usize,
    tau_e: f64,
) -> Result<Vec<Array1<f64>>> {
    if num_clients == 0 {
        return Err(Error::Config("need at least one client".into()));
    }
    if !(tau_e >= 0.0) {
        return Err(Error::Config(format!("noise scale must be non-negative, got {tau_e}")));
    }
    if num_clients == 1 {
        if tau_e > 0.0 {
            return Err(Error::Contract(
                "correlated noise with a single client cannot sum to zero".into(),
            ));
        }
        return Ok(vec![Array1::zeros(dim)]);
    }
    if tau_e == 0.0 {
        return Ok(vec![Array1::zeros(dim); num_clients]);
    }

    let s = num_clients as f64;
    // Inflated draw variance, so the centered marginals come out at tau_e^2.
    let sigma_z = tau_e * (s / (s - 1.0)).sqrt();
    let mut mean = Array1::<f64>::zeros(dim);
    let mut draws: Vec<Array1<f64>> = Vec::with_capacity(num_clients);
    for client in 0..num_clients {
        let key = StreamKey::new(master_seed, Party::Client(client as u32), slot, role);
        let mut rng = key.rng();
        let mean = mean.as_slice_mut().expect("contiguous");
        let draw = Array1::from_iter((0..dim).map(|j| {
            let value = sigma_z * rng.sample::<f64, _>(StandardNormal);
            mean[j] += value;
            value
        }));
        draws.push(draw);
    }
    mean /= s;
    for draw in &mut draws {
        *draw -= &mean;
    }
    Ok(draws)
}
