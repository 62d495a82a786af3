"""Hope-speech detection toolkit: corpus statistics, TF-IDF and embedding
features, classical and CNN-BiLSTM classifiers, and weighted-F1 evaluation."""

__version__ = "0.1.0"
