//! Emotion scores, per-video series and summaries.

mod classifier;
mod scores;
mod summary;

pub use classifier::{classify_emotions, Classification, Classifier};
pub use scores::{dominant_label, negative_score, Emotion, EmotionScores, SIMPLEX_EPS};
pub use summary::{
    read_series_csv, read_summary_csv, summary_columns, video_summary, write_series_csv,
    write_summary_csv, EmotionSeries, SeriesFrame, SummaryRow, VideoSummary, SERIES_COLUMNS,
};
