// Application logic goes here.
