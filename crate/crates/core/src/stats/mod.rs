//! Rank correlation, PCA with varimax rotation, Kruskal-Wallis and tertiles.

pub mod gamma;
mod kruskal;
mod pca;
mod quantile;
mod rank;

pub use kruskal::{kruskal_wallis, KwResult};
pub use pca::{pca, varimax, varimax_criterion, PcaModel, VarimaxResult};
pub use quantile::{quantile, quantile_sorted, tertile_split, Tier};
pub use rank::{average_ranks, pearson, spearman, spearman_matrix, tie_runs, CorrelationMatrix};
