//! Dataset ingestion, splitting and the synthetic generator.

mod movielens;
mod split;
mod synthetic;

pub use movielens::{
    binarize, parse_movielens, parse_movies, parse_ratings, parse_users, Gender, Genre, Interaction,
    MovieInfo, MovieLens, UserInfo, AGE_CODES, OCCUPATIONS, RELEVANCE_THRESHOLD,
};
pub use split::{random_split, temporal_split, SplitDataset, SplitKind, SplitRatios};
pub use synthetic::{
    generate_synthetic, ground_truth, read_synthetic_csv, rules_fired, write_synthetic_csv, SyntheticConfig,
    SyntheticSample, SupportMode, SYNTHETIC_ATOMS, SYNTHETIC_CSV_HEADER,
};
