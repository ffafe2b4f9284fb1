//! Key material for one workspace, stored as `key = hex` lines.

use std::path::Path;

use rand::{Rng, RngCore};

use super::HarnessError;
use crate::config::KvConfig;
use crate::crypto::{encode_point, BlindingSecret, KeyPair, PrimeField, Scalar};

pub const KEYS_FILE: &str = "keys.txt";
pub const PUBLIC_FILE: &str = "public.txt";

#[derive(Clone)]
pub struct Keys {
    pub analyzer: KeyPair,
    pub shuffler: KeyPair,
    pub shuffler2: KeyPair,
    pub blinding: BlindingSecret,
    pub crowd_hash_key: [u8; 32],
}

const KEY_NAMES: &[&str] = &["analyzer", "shuffler", "shuffler2", "blinding", "crowd_hash_key"];

impl Keys {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Keys {
            analyzer: KeyPair::generate(rng),
            shuffler: KeyPair::generate(rng),
            shuffler2: KeyPair::generate(rng),
            blinding: BlindingSecret::random(rng),
            crowd_hash_key: {
                let mut k = [0u8; 32];
                rng.fill(&mut k[..]);
                k
            },
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "analyzer = {}\nshuffler = {}\nshuffler2 = {}\nblinding = {}\ncrowd_hash_key = {}\n",
            hex::encode(self.analyzer.secret_bytes()),
            hex::encode(self.shuffler.secret_bytes()),
            hex::encode(self.shuffler2.secret_bytes()),
            hex::encode(self.blinding.alpha().to_be_bytes()),
            hex::encode(self.crowd_hash_key),
        )
    }

    pub fn public_text(&self) -> String {
        format!(
            "analyzer = {}\nshuffler = {}\nshuffler2 = {}\n",
            hex::encode(encode_point(self.analyzer.public())),
            hex::encode(encode_point(self.shuffler.public())),
            hex::encode(encode_point(self.shuffler2.public())),
        )
    }

    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let kv = KvConfig::parse(text)?;
        kv.check_keys(KEY_NAMES)?;
        let bytes = |name: &str| -> Result<Vec<u8>, HarnessError> {
            let v = kv
                .get_str(name)
                .ok_or_else(|| HarnessError::Config(format!("keys: missing `{name}`")))?;
            hex::decode(v).map_err(|_| HarnessError::Config(format!("keys: `{name}` is not hex")))
        };
        let kp = |name: &str| -> Result<KeyPair, HarnessError> {
            KeyPair::from_secret_bytes(&bytes(name)?).map_err(|e| HarnessError::Config(format!("keys: `{name}`: {e}")))
        };
        let alpha = <Scalar as PrimeField>::from_be_bytes(&bytes("blinding")?)
            .ok_or_else(|| HarnessError::Config("keys: bad blinding scalar".into()))?;
        Ok(Keys {
            analyzer: kp("analyzer")?,
            shuffler: kp("shuffler")?,
            shuffler2: kp("shuffler2")?,
            blinding: BlindingSecret::new(alpha).map_err(|e| HarnessError::Config(format!("keys: {e}")))?,
            crowd_hash_key: bytes("crowd_hash_key")?
                .try_into()
                .map_err(|_| HarnessError::Config("keys: crowd_hash_key must be 32 bytes".into()))?,
        })
    }

    /// Writes the secret and public key files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let p = dir.join(KEYS_FILE);
        std::fs::write(&p, self.to_text()).map_err(|e| HarnessError::io(&p, e))?;
        let p = dir.join(PUBLIC_FILE);
        std::fs::write(&p, self.public_text()).map_err(|e| HarnessError::io(&p, e))
    }

    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let p = dir.join(KEYS_FILE);
        Self::from_text(&std::fs::read_to_string(&p).map_err(|e| HarnessError::io(&p, e))?)
    }
}
