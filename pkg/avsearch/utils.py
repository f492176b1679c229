"""JSON codec for suite summaries.

Classes
-------
AvsEncoder
    JSON encoder aware of numpy values, enums and reports.
AvsDecoder
    JSON decoder restoring numpy arrays written by `AvsEncoder`.
"""
import enum
import json

import numpy as np


class AvsEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.ndarray):
            return {
                '__data': obj.tolist(),
                '__dtype': str(obj.dtype),
            }
        elif isinstance(obj, np.generic):
            return obj.item()
        elif isinstance(obj, enum.Enum):
            return obj.value
        elif hasattr(obj, 'to_dict'):
            return obj.to_dict()
        else:
            return super(AvsEncoder, self).default(obj)


class AvsDecoder(json.JSONDecoder):
    def __init__(self, *args, **kwargs):
        super(AvsDecoder, self).__init__(
            *args, object_hook=self.object_hook, **kwargs)

    def object_hook(self, obj):
        if isinstance(obj, dict) and sorted(obj.keys()) == ['__data', '__dtype']:
            return np.array(obj['__data']).astype(obj['__dtype'])
        else:
            return obj
