//! Building blocks for crawling CC-licensed videos with subtitles into a
//! speech corpus and curating it by alignment score.

pub mod coordinator;
pub mod crawl;
pub mod curation;
pub mod download;
pub mod harvester;
pub mod model;
pub mod pipeline;
pub mod platform;
pub mod report;
