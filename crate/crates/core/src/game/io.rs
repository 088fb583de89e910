//! Binary game files.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size | field                                          |
//! |--------|------|------------------------------------------------|
//! | 0      | 8    | magic `INPGGAME`                               |
//! | 8      | 4    | format version (`u32`, currently 1)            |
//! | 12     | 4    | `N` (`u32`)                                    |
//! | 16     | 4    | `|A|` (`u32`)                                  |
//! | 20     | 1    | generator tag: 0 identical, 1 general, 2 custom |
//! | 21     | 3    | reserved, zero                                 |
//! | 24     | 8    | `phi_max` (`f64`)                              |
//! | 32     | 8    | seed (`u64`)                                   |
//! | 40     | ...  | `Φ`, then `u_0 .. u_{N-1}`, each `|A|^N` `f64` |
//!
//! Tensors use the row-major layout of [`PotentialGame`].

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{dense_entries, GameKind, PotentialGame, DEFAULT_MAX_ENTRIES};
use crate::error::{Error, Result};

pub const GAME_MAGIC: &[u8; 8] = b"INPGGAME";
pub const GAME_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

pub fn encode_game(game: &PotentialGame) -> Vec<u8> {
    let entries = game.num_entries();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * entries * (game.num_agents() + 1));
    buf.extend_from_slice(GAME_MAGIC);
    buf.extend_from_slice(&GAME_FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(game.num_agents() as u32).to_le_bytes());
    buf.extend_from_slice(&(game.num_actions() as u32).to_le_bytes());
    buf.push(game.kind().tag());
    buf.extend_from_slice(&[0u8; 3]);
    buf.extend_from_slice(&game.phi_max().to_le_bytes());
    buf.extend_from_slice(&game.seed().to_le_bytes());
    let mut put = |t: &[f64]| t.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    put(game.potential());
    for agent in 0..game.num_agents() {
        put(game.utility(agent));
    }
    buf
}

pub fn decode_game(bytes: &[u8]) -> Result<PotentialGame> {
    decode_game_capped(bytes, DEFAULT_MAX_ENTRIES)
}

pub fn decode_game_capped(bytes: &[u8], cap: usize) -> Result<PotentialGame> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != GAME_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != GAME_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let num_agents = u32_at(12) as usize;
    let num_actions = u32_at(16) as usize;
    let kind = GameKind::from_tag(bytes[20])
        .ok_or_else(|| Error::Format(format!("unknown generator tag {}", bytes[20])))?;
    let phi_max = f64::from_bits(u64_at(24));
    let seed = u64_at(32);
    let entries = dense_entries(num_agents, num_actions, cap)?;
    let expected = HEADER_LEN + 8 * entries * (num_agents + 1);
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for N = {num_agents}, |A| = {num_actions}, found {}",
            bytes.len()
        )));
    }
    let mut tensors = bytes[HEADER_LEN..].chunks_exact(8 * entries).map(|chunk| {
        chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect::<Vec<f64>>()
    });
    let potential = tensors.next().unwrap();
    let utilities: Vec<Vec<f64>> = tensors.collect();
    PotentialGame::assemble(num_agents, num_actions, potential, utilities, phi_max, seed, kind, cap)
}

pub fn write_game(game: &PotentialGame, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_game(game)).map_err(|e| Error::io(path, e))
}

pub fn read_game(path: &Path) -> Result<PotentialGame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_game(&bytes)
}

/// Human-readable description, including empirical `Φ` statistics next to
/// the declared bound.
pub fn summary(game: &PotentialGame) -> String {
    let phi = game.potential();
    let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let max = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    format!(
        "kind: {}\nagents (N): {}\nactions (|A|): {}\nentries (|A|^N): {}\nseed: {}\n\
         identical interest: {}\nphi_max (declared): {}\nphi min: {min:.17e}\nphi max (empirical): {max:.17e}\nphi mean: {mean:.17e}\n",
        game.kind().name(),
        game.num_agents(),
        game.num_actions(),
        game.num_entries(),
        game.seed(),
        game.is_identical_interest(),
        game.phi_max(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{make_general_potential, make_identical_interest};

    #[test]
    fn round_trip_preserves_every_bit() {
        for game in [
            make_identical_interest(3, 4, 17).unwrap(),
            make_general_potential(2, 5, 3).unwrap(),
        ] {
            let bytes = encode_game(&game);
            let back = decode_game(&bytes).unwrap();
            assert_eq!(back.kind(), game.kind());
            assert_eq!(back.seed(), game.seed());
            assert_eq!(back.phi_max().to_bits(), game.phi_max().to_bits());
            assert_eq!(back.is_identical_interest(), game.is_identical_interest());
            assert_eq!(encode_game(&back), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let game = make_identical_interest(1, 1, 0).unwrap();
        let bytes = encode_game(&game);
        assert_eq!(bytes.len(), 40 + 16);
        assert_eq!(&bytes[..8], b"INPGGAME");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(bytes[20], 0);
        assert_eq!(&bytes[24..32], &1.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let game = make_identical_interest(2, 2, 0).unwrap();
        let mut bytes = encode_game(&game);
        assert!(decode_game(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode_game(&bytes), Err(Error::Format(_))));
        let mut bytes = encode_game(&game);
        bytes[20] = 9;
        assert!(decode_game(&bytes).is_err());
    }
}
