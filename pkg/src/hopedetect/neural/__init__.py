from .estimator import CNNBiLSTMClassifier, train
from .model import CNNBiLSTM, NeuralConfig, backward, forward
from .train import Adam, EarlyStopping, TrainingDivergedError, TrainRecord, train_network

__all__ = [
    "Adam", "CNNBiLSTM", "CNNBiLSTMClassifier", "EarlyStopping", "NeuralConfig",
    "TrainRecord", "TrainingDivergedError", "backward", "forward", "train", "train_network",
]
