//! Shared helpers for integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fuzzyrec::data::{Genre, OCCUPATIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Size of a generated corpus in MovieLens `::` format.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub users: u32,
    pub movies: u32,
    pub ratings_per_user: u32,
    pub seed: u64,
}

impl Default for Fixture {
    fn default() -> Self {
        Self {
            users: 120,
            movies: 80,
            ratings_per_user: 25,
            seed: 7,
        }
    }
}

/// Writes `users.dat`, `movies.dat` and `ratings.dat` into `dir`.
///
/// Ratings follow a hidden movie quality and user leniency, plus a bonus
/// when the movie carries the user's preferred genre, so the statistic atoms
/// carry signal the way they do on real data.
pub fn write_fixture(dir: &Path, f: Fixture) {
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    let ages = [1, 18, 25, 35, 45, 50, 56];

    let mut users = String::new();
    let mut taste = Vec::new();
    let mut leniency = Vec::new();
    for u in 1..=f.users {
        let gender = if rng.gen_bool(0.7) { "M" } else { "F" };
        let age = ages[rng.gen_range(0..ages.len())];
        let occ = rng.gen_range(0..OCCUPATIONS.len());
        writeln!(users, "{u}::{gender}::{age}::{occ}::{:05}", rng.gen_range(0..99999)).unwrap();
        taste.push(Genre::ALL[rng.gen_range(0..6)]);
        leniency.push(rng.gen_range(-0.8..0.8));
    }

    let mut movies = String::new();
    let mut genres: Vec<Vec<Genre>> = Vec::new();
    let mut quality = Vec::new();
    let mut popularity = Vec::new();
    for m in 1..=f.movies {
        let year = rng.gen_range(1925..2001);
        let mut gs: Vec<Genre> = Vec::new();
        for _ in 0..rng.gen_range(1..4) {
            let g = Genre::ALL[rng.gen_range(0..Genre::ALL.len())];
            if !gs.contains(&g) {
                gs.push(g);
            }
        }
        let names: Vec<&str> = gs.iter().map(|g| g.name()).collect();
        writeln!(movies, "{m}::Movie {m} ({year})::{}", names.join("|")).unwrap();
        genres.push(gs);
        quality.push(rng.gen_range(-1.2..1.2));
        popularity.push(rng.gen_range(0.2..3.0f64));
    }
    let total_pop: f64 = popularity.iter().sum();

    let mut ratings = String::new();
    for u in 1..=f.users {
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < f.ratings_per_user.min(f.movies) as usize {
            // Popular movies are rated more often.
            let mut x = rng.gen_range(0.0..total_pop);
            let mut m = 0;
            while x > popularity[m] && m + 1 < popularity.len() {
                x -= popularity[m];
                m += 1;
            }
            if !seen.insert(m) {
                continue;
            }
            let ui = (u - 1) as usize;
            let bonus = if genres[m].contains(&taste[ui]) { 0.7 } else { 0.0 };
            let r: f64 = 3.3 + quality[m] + leniency[ui] + bonus + rng.gen_range(-0.9..0.9);
            let r = r.round().clamp(1.0, 5.0) as u8;
            let t = 956_703_932i64 + rng.gen_range(0..30_000_000);
            writeln!(ratings, "{u}::{}::{r}::{t}", m + 1).unwrap();
        }
    }

    fs::write(dir.join("users.dat"), users).unwrap();
    fs::write(dir.join("movies.dat"), movies).unwrap();
    fs::write(dir.join("ratings.dat"), ratings).unwrap();
}
