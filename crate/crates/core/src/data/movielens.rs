//! MovieLens 1M `.dat` files (`::`-separated).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Ratings at or above this value are relevant.
pub const RELEVANCE_THRESHOLD: f64 = 4.0;

/// Age bracket codes used by `users.dat`.
pub const AGE_CODES: [u8; 7] = [1, 18, 25, 35, 45, 50, 56];

/// Occupation labels indexed by their `users.dat` code.
pub const OCCUPATIONS: [&str; 21] = [
    "other",
    "academic/educator",
    "artist",
    "clerical/admin",
    "college/grad student",
    "customer service",
    "doctor/health care",
    "executive/managerial",
    "farmer",
    "homemaker",
    "K-12 student",
    "lawyer",
    "programmer",
    "retired",
    "sales/marketing",
    "scientist",
    "self-employed",
    "technician/engineer",
    "tradesman/craftsman",
    "unemployed",
    "writer",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserInfo {
    pub user_id: u32,
    pub gender: Gender,
    pub age: u8,
    pub occupation: u8,
    pub zip: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Genre {
    Action,
    Adventure,
    Animation,
    Childrens,
    Comedy,
    Crime,
    Documentary,
    Drama,
    Fantasy,
    FilmNoir,
    Horror,
    Musical,
    Mystery,
    Romance,
    SciFi,
    Thriller,
    War,
    Western,
}

impl Genre {
    pub const ALL: [Genre; 18] = [
        Genre::Action,
        Genre::Adventure,
        Genre::Animation,
        Genre::Childrens,
        Genre::Comedy,
        Genre::Crime,
        Genre::Documentary,
        Genre::Drama,
        Genre::Fantasy,
        Genre::FilmNoir,
        Genre::Horror,
        Genre::Musical,
        Genre::Mystery,
        Genre::Romance,
        Genre::SciFi,
        Genre::Thriller,
        Genre::War,
        Genre::Western,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Genre::Action => "Action",
            Genre::Adventure => "Adventure",
            Genre::Animation => "Animation",
            Genre::Childrens => "Children's",
            Genre::Comedy => "Comedy",
            Genre::Crime => "Crime",
            Genre::Documentary => "Documentary",
            Genre::Drama => "Drama",
            Genre::Fantasy => "Fantasy",
            Genre::FilmNoir => "Film-Noir",
            Genre::Horror => "Horror",
            Genre::Musical => "Musical",
            Genre::Mystery => "Mystery",
            Genre::Romance => "Romance",
            Genre::SciFi => "Sci-Fi",
            Genre::Thriller => "Thriller",
            Genre::War => "War",
            Genre::Western => "Western",
        }
    }

    pub fn from_name(name: &str) -> Option<Genre> {
        Genre::ALL.into_iter().find(|g| g.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovieInfo {
    pub item_id: u32,
    pub title: String,
    /// Release year parsed from a trailing `(YYYY)` in the title.
    pub year: Option<u16>,
    genre_mask: u32,
}

impl MovieInfo {
    pub fn new(item_id: u32, title: String, genres: &[Genre]) -> Self {
        let year = release_year(&title);
        let genre_mask = genres.iter().fold(0, |m, g| m | (1 << g.index()));
        Self {
            item_id,
            title,
            year,
            genre_mask,
        }
    }

    pub fn has_genre(&self, genre: Genre) -> bool {
        self.genre_mask & (1 << genre.index()) != 0
    }

    pub fn genres(&self) -> impl Iterator<Item = Genre> + '_ {
        Genre::ALL.into_iter().filter(|&g| self.has_genre(g))
    }
}

fn release_year(title: &str) -> Option<u16> {
    let t = title.trim_end();
    let inner = t.strip_suffix(')')?;
    let open = inner.rfind('(')?;
    let digits = &inner[open + 1..];
    if digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

/// Parsed MovieLens corpus.
#[derive(Debug, Clone, Default)]
pub struct MovieLens {
    pub interactions: Vec<Interaction>,
    pub users: BTreeMap<u32, UserInfo>,
    pub movies: BTreeMap<u32, MovieInfo>,
}

/// `1` iff `rating >= threshold`.
pub fn binarize(rating: f64, threshold: f64) -> bool {
    rating >= threshold
}

/// Reads `ratings.dat`, `users.dat` and `movies.dat` from `dir`.
pub fn parse_movielens(dir: impl AsRef<Path>) -> Result<MovieLens> {
    let dir = dir.as_ref();
    let open = |name: &str| -> Result<(BufReader<File>, std::path::PathBuf)> {
        let path = dir.join(name);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok((BufReader::new(file), path))
    };
    let (ratings, rp) = open("ratings.dat")?;
    let (users, up) = open("users.dat")?;
    let (movies, mp) = open("movies.dat")?;
    Ok(MovieLens {
        interactions: parse_ratings(ratings, &rp)?,
        users: parse_users(users, &up)?,
        movies: parse_movies(movies, &mp)?,
    })
}

/// Splits every line on `::`, yielding (1-based line number, raw bytes).
fn for_each_line(
    mut reader: impl BufRead,
    path: &Path,
    mut f: impl FnMut(usize, &[u8]) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if read == 0 {
            return Ok(());
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.is_empty() {
            continue;
        }
        f(line_no, &buf)?;
    }
}

fn utf8_fields<'a>(line: &'a [u8], path: &Path, line_no: usize) -> Result<Vec<&'a str>> {
    let text = std::str::from_utf8(line)
        .map_err(|_| Error::parse(path, line_no, "line is not valid UTF-8"))?;
    Ok(text.split("::").collect())
}

fn field<T: std::str::FromStr>(raw: &str, what: &str, path: &Path, line_no: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(path, line_no, format!("invalid {what} {raw:?}")))
}

pub fn parse_ratings(reader: impl BufRead, path: &Path) -> Result<Vec<Interaction>> {
    let mut out = Vec::new();
    for_each_line(reader, path, |line_no, line| {
        let fields = utf8_fields(line, path, line_no)?;
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let user_id: u32 = field(fields[0], "user id", path, line_no)?;
        let item_id: u32 = field(fields[1], "movie id", path, line_no)?;
        let rating: f64 = field(fields[2], "rating", path, line_no)?;
        let timestamp: i64 = field(fields[3], "timestamp", path, line_no)?;
        if user_id == 0 || item_id == 0 {
            return Err(Error::parse(path, line_no, "ids must be positive"));
        }
        if !(1.0..=5.0).contains(&rating) {
            return Err(Error::parse(path, line_no, format!("rating {rating} outside [1, 5]")));
        }
        out.push(Interaction {
            user_id,
            item_id,
            rating,
            timestamp,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_users(reader: impl BufRead, path: &Path) -> Result<BTreeMap<u32, UserInfo>> {
    let mut out = BTreeMap::new();
    for_each_line(reader, path, |line_no, line| {
        let fields = utf8_fields(line, path, line_no)?;
        if fields.len() != 5 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let user_id: u32 = field(fields[0], "user id", path, line_no)?;
        let gender = match fields[1].trim() {
            "F" => Gender::Female,
            "M" => Gender::Male,
            other => return Err(Error::parse(path, line_no, format!("invalid gender {other:?}"))),
        };
        let age: u8 = field(fields[2], "age", path, line_no)?;
        if !AGE_CODES.contains(&age) {
            return Err(Error::parse(path, line_no, format!("unknown age code {age}")));
        }
        let occupation: u8 = field(fields[3], "occupation", path, line_no)?;
        if usize::from(occupation) >= OCCUPATIONS.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("unknown occupation code {occupation}"),
            ));
        }
        out.insert(
            user_id,
            UserInfo {
                user_id,
                gender,
                age,
                occupation,
                zip: fields[4].trim().to_string(),
            },
        );
        Ok(())
    })?;
    Ok(out)
}

/// Titles are decoded lossily; the id and genre fields must be ASCII.
pub fn parse_movies(reader: impl BufRead, path: &Path) -> Result<BTreeMap<u32, MovieInfo>> {
    let mut out = BTreeMap::new();
    for_each_line(reader, path, |line_no, line| {
        let fields: Vec<&[u8]> = split_bytes(line);
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let ascii = |raw: &[u8], what: &str| -> Result<String> {
            String::from_utf8(raw.to_vec())
                .map_err(|_| Error::parse(path, line_no, format!("{what} is not valid UTF-8")))
        };
        let item_id: u32 = field(&ascii(fields[0], "movie id")?, "movie id", path, line_no)?;
        let title = String::from_utf8_lossy(fields[1]).into_owned();
        let genre_field = ascii(fields[2], "genre list")?;
        let mut genres = Vec::new();
        for name in genre_field.split('|').filter(|s| !s.is_empty()) {
            let genre = Genre::from_name(name.trim())
                .ok_or_else(|| Error::parse(path, line_no, format!("unknown genre {name:?}")))?;
            genres.push(genre);
        }
        out.insert(item_id, MovieInfo::new(item_id, title, &genres));
        Ok(())
    })?;
    Ok(out)
}

/// Splits on the first two `::` tokens so titles keep any later content.
fn split_bytes(line: &[u8]) -> Vec<&[u8]> {
    let mut parts = Vec::with_capacity(3);
    let mut rest = line;
    while parts.len() < 2 {
        match rest.windows(2).position(|w| w == b"::") {
            Some(pos) => {
                parts.push(&rest[..pos]);
                rest = &rest[pos + 2..];
            }
            None => break,
        }
    }
    parts.push(rest);
    parts
}
