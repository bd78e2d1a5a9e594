//! Text topic classification: n-gram features over a multinomial logistic
//! regression, plus pluggable sentiment scoring.

mod lbfgs;
mod model;
mod ngram;
mod sentiment;
mod tokenize;

pub use model::{
    crossvalidate, stratified_folds, train_text_classifier, CvOutcome, TextModel, TextObjective,
    TextTrainOptions, TrainedText,
};
pub use ngram::{FeatureVector, NgramVocabulary};
pub use sentiment::{
    ExternalScorer, ExternalScorerConfig, LexiconScorer, SentimentFallback, SentimentProvider,
    SentimentScore,
};
pub use tokenize::{DefaultTokenizer, Tokenizer};
