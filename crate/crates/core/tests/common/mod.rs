//! Reference implementations used as test oracles. They favour obviousness
//! over speed and share no code with the library.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("config")
        .join(name)
}

fn pow2(k: i32) -> f64 {
    assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// `m * 2^e` for an exactly representable result.
fn scale(m: f64, mut e: i32) -> f64 {
    let mut x = m;
    while e < -1000 {
        x *= pow2(-1000);
        e += 1000;
    }
    while e > 1000 {
        x *= pow2(1000);
        e -= 1000;
    }
    x * pow2(e)
}

/// Correctly rounded (ties to even) sum of finite doubles, computed with
/// arbitrary-precision integers in units of 2^-1074.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut acc = BigInt::zero();
    for &x in xs {
        assert!(x.is_finite());
        if x == 0.0 {
            continue;
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let mut v = BigInt::from(mant) << ((e + 1074) as usize);
        if x < 0.0 {
            v = -v;
        }
        acc += v;
    }
    if acc.is_zero() {
        return 0.0;
    }
    let negative = acc.is_negative();
    let mag = acc.abs();
    let bits = mag.bits() as i64;
    let (mant, shift) = if bits <= 53 {
        (mag.to_u64().unwrap(), 0i64)
    } else {
        let shift = bits - 53;
        let top = (&mag >> (shift as usize)).to_u64().unwrap();
        let rest = &mag - (BigInt::from(top) << (shift as usize));
        let half = BigInt::from(1u8) << ((shift - 1) as usize);
        let round_up = rest > half || (rest == half && top & 1 == 1);
        (top + u64::from(round_up), shift)
    };
    let v = scale(mant as f64, (shift - 1074) as i32);
    if negative {
        -v
    } else {
        v
    }
}

/// Distance to the next representable double away from zero.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    f64::from_bits(a.to_bits() + 1) - a
}

/// Longest common subsequence by exhaustive search over subsets of the
/// correct lines. Among maximum-size subsets, the lexicographically smallest
/// sorted index list wins. Returns the kept correct-line indices.
pub fn brute_force_lcs(bug: &[&str], correct: &[&str]) -> Vec<usize> {
    let m = correct.len();
    assert!(m < 32);
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|b| size < b.len()) {
            continue;
        }
        let picked: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let mut it = bug.iter();
        let is_subsequence = picked.iter().all(|&i| it.any(|b| *b == correct[i]));
        if !is_subsequence {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => size > b.len() || picked < *b,
        };
        if better {
            best = Some(picked);
        }
    }
    best.unwrap_or_default()
}

/// One request seen by [`MockServer`].
#[derive(Debug, Clone)]
pub struct SeenRequest {
    pub head: String,
    pub body: String,
}

/// Minimal HTTP/1.1 server answering each connection with the next scripted
/// `(status, body)` response, then closing it. Once the script runs out it
/// keeps repeating the last entry.
pub struct MockServer {
    pub url: String,
    seen: std::sync::Arc<std::sync::Mutex<Vec<SeenRequest>>>,
}

impl MockServer {
    pub fn start(script: Vec<(u16, String)>) -> MockServer {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let seen = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut head = String::new();
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    head.push_str(&line);
                }
                let len = head
                    .lines()
                    .find_map(|l| {
                        let (k, v) = l.split_once(':')?;
                        k.eq_ignore_ascii_case("content-length")
                            .then(|| v.trim().parse::<usize>().ok())?
                    })
                    .unwrap_or(0);
                let mut body = vec![0; len];
                let _ = reader.read_exact(&mut body);
                log.lock().unwrap().push(SeenRequest {
                    head,
                    body: String::from_utf8_lossy(&body).into_owned(),
                });
                let (status, reply) = &script[n.min(script.len() - 1)];
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            }
        });
        MockServer { url, seen }
    }

    pub fn requests(&self) -> Vec<SeenRequest> {
        self.seen.lock().unwrap().clone()
    }
}

/// A URL nothing listens on.
pub fn dead_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/")
}
