// placeholder translation unit; implementation lands with its module
